//! The `dextrain` command line.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dextrain_core::task::{run_session, Protocol, SceneConfig};
use dextrain_core::Vec3;
use dextrain_io::pipeline::{replay_to_inputs, write_pose_csv};
use dextrain_io::replay::{read_replay, write_replay, ReplayRecord};
use dextrain_io::report::{event_log_jsonl, write_session_report};
use dextrain_io::scene::{load_scene, save_scene};
use dextrain_io::synth::learner::{run_learner, LearnerConfig};
use dextrain_io::synth::script::Script;
use dextrain_io::synth::{synth_tracking, NoiseSpec, TrackingScenario, REPLAY_FILE};
use dextrain_io::CalibrationFile;
use dextrain_service::{HubConfig, InputMode, Service, ServiceConfig};

/// The hand-traced handover session shipped with the repository.
pub const ORACLE_SCRIPT: &str = include_str!("../../../data/scripts/handover_oracle.toml");

pub const SCENE_FILE: &str = "scene.toml";
pub const CALIB_FILE: &str = "calib.toml";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Parser)]
#[command(name = "dextrain", version, about = "Low-cost laparoscopic dexterity trainer: tracking, teleoperation and peg-transfer engine")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run tracking only and write one pose row per controller per frame.
    Track {
        #[arg(long)]
        replay: PathBuf,
        /// Calibration file; the default rig when omitted.
        #[arg(long)]
        calib: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full engine headless on a replay and write the session report.
    Run {
        #[arg(long)]
        replay: PathBuf,
        #[arg(long)]
        calib: Option<PathBuf>,
        /// Scene file; the default scene when omitted.
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long)]
        report: PathBuf,
        /// Event log (JSON lines); defaults to the report path with an
        /// `.events.jsonl` extension.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Generate a replay with ground truth.
    Synth(SynthArgs),
    /// Start the live service.
    Serve(ServeArgs),
    /// Calibration files.
    Calib {
        #[command(subcommand)]
        action: CalibAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum CalibAction {
    /// Write the default calibration.
    Init {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    /// Both LEDs held still.
    Static,
    /// LEDs on circles in front of the rig.
    Circle,
    /// A scripted single-trial session (inputs only).
    Scripted,
    /// A simulated trainee playing a whole protocol (inputs only).
    Learner,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub scenario: Scenario,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Blob centroid noise, pixels per axis.
    #[arg(long, default_value_t = 0.0)]
    pub noise_px: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Tracking scenarios: length of the recording.
    #[arg(long, default_value_t = 10.0)]
    pub duration_s: f64,
    /// Tracking scenarios: render PGM frames instead of blob records.
    #[arg(long)]
    pub frames: bool,
    /// Gyro white noise, rad/s.
    #[arg(long, default_value_t = 0.0)]
    pub gyro_sigma: f64,
    /// Constant gyro bias on every axis, rad/s.
    #[arg(long, default_value_t = 0.0)]
    pub gyro_bias: f64,
    /// Accelerometer white noise, m/s².
    #[arg(long, default_value_t = 0.0)]
    pub accel_sigma: f64,
    /// Tracking scenarios: calibration to render with.
    #[arg(long)]
    pub calib: Option<PathBuf>,
    /// Scripted and learner scenarios: scene to play.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Scripted scenario: script file; the bundled handover oracle when omitted.
    #[arg(long)]
    pub script: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Static files for the trainer UI.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = InputMode::Pose)]
    pub input: InputMode,
    /// Calibration for `--input raw`; the default rig when omitted.
    #[arg(long)]
    pub calib: Option<PathBuf>,
    /// Write the inputs of each completed session here as a replay.
    #[arg(long)]
    pub record: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Track { replay, calib, out } => track(&replay, calib.as_deref(), &out),
        Command::Run { replay, calib, scene, report, events } => {
            let events = events.unwrap_or_else(|| report.with_extension("events.jsonl"));
            run_replay(&replay, calib.as_deref(), scene.as_deref(), &report, &events)
        }
        Command::Synth(args) => synth(&args),
        Command::Serve(args) => serve(args),
        Command::Calib { action: CalibAction::Init { out } } => {
            CalibrationFile::default().save(&out)?;
            Ok(())
        }
    }
}

fn load_calib(path: Option<&Path>) -> Result<CalibrationFile> {
    Ok(match path {
        Some(p) => CalibrationFile::load(p)?,
        None => CalibrationFile::default(),
    })
}

fn load_scene_or(path: Option<&Path>, default: SceneConfig) -> Result<SceneConfig> {
    Ok(match path {
        Some(p) => load_scene(p)?,
        None => default,
    })
}

fn frame_dir(replay: &Path) -> &Path {
    replay.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."))
}

pub fn track(replay: &Path, calib: Option<&Path>, out: &Path) -> Result<()> {
    let calib = load_calib(calib)?;
    let records = read_replay(replay)?;
    let (_, rows) = replay_to_inputs(&records, &calib, Vec3::ZERO, frame_dir(replay))?;
    let file = std::fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
    write_pose_csv(std::io::BufWriter::new(file), &rows)?;
    tracing::info!(rows = rows.len(), "wrote {}", out.display());
    Ok(())
}

pub fn run_replay(replay: &Path, calib: Option<&Path>, scene: Option<&Path>, report: &Path, events: &Path) -> Result<()> {
    let calib = load_calib(calib)?;
    let scene = load_scene_or(scene, SceneConfig::default())?;
    let records = read_replay(replay)?;
    let (inputs, _) = replay_to_inputs(&records, &calib, scene.teleop.grip_point_offset, frame_dir(replay))?;
    let result = run_session(scene, inputs);
    write_session_report(report, &result)?;
    std::fs::write(events, event_log_jsonl(&result)).with_context(|| format!("writing {}", events.display()))?;
    for t in &result.trials {
        tracing::info!(trial = t.trial_id, transfers = t.transfers, drops = t.drops, truncated = t.truncated_input, "trial scored");
    }
    Ok(())
}

/// One scored trial, no familiarization: the scene scripts are written for.
pub fn single_trial_scene() -> SceneConfig {
    let protocol = Protocol { familiarization_s: 0.0, trials: 1, break_s: 0.0, ..Protocol::default() };
    SceneConfig { protocol, ..SceneConfig::default() }
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    match args.scenario {
        Scenario::Static | Scenario::Circle => {
            let calib = load_calib(args.calib.as_deref())?;
            let base = if args.scenario == Scenario::Static {
                TrackingScenario::static_pose()
            } else {
                TrackingScenario::circle()
            };
            let scenario = TrackingScenario { duration_s: args.duration_s, render_frames: args.frames, ..base };
            let noise = NoiseSpec {
                pixel_sigma: args.noise_px,
                gyro_sigma: args.gyro_sigma,
                gyro_bias: Vec3::new(args.gyro_bias, args.gyro_bias, args.gyro_bias),
                accel_sigma: args.accel_sigma,
            };
            let out = synth_tracking(&scenario, &calib, &noise, args.seed)?;
            out.write(&args.out)?;
            calib.save(&args.out.join(CALIB_FILE))?;
            tracing::info!(records = out.records.len(), "wrote {}", args.out.display());
        }
        Scenario::Scripted => {
            if args.noise_px != 0.0 {
                bail!("the scripted scenario emits controller inputs; --noise-px does not apply");
            }
            let scene = load_scene_or(args.scene.as_deref(), single_trial_scene())?;
            let script = match &args.script {
                Some(p) => Script::load(p)?,
                None => Script::from_toml(ORACLE_SCRIPT)?,
            };
            let records: Vec<_> = script.inputs(&scene)?.into_iter().map(ReplayRecord::Input).collect();
            write_replay(&args.out.join(REPLAY_FILE), &records)?;
            save_scene(&scene, &args.out.join(SCENE_FILE))?;
        }
        Scenario::Learner => {
            if args.noise_px != 0.0 {
                bail!("the learner scenario emits controller inputs; --noise-px does not apply");
            }
            let scene = load_scene_or(args.scene.as_deref(), SceneConfig::default())?;
            let run = run_learner(&scene, &LearnerConfig::default(), args.seed);
            let records: Vec<_> = run.inputs.into_iter().map(ReplayRecord::Input).collect();
            write_replay(&args.out.join(REPLAY_FILE), &records)?;
            save_scene(&scene, &args.out.join(SCENE_FILE))?;
            write_session_report(&args.out.join(REPORT_FILE), &run.report)?;
        }
    }
    Ok(())
}

pub fn serve(args: ServeArgs) -> Result<()> {
    let scene = load_scene_or(args.scene.as_deref(), SceneConfig::default())?;
    let calib = match args.input {
        InputMode::Raw => Some(load_calib(args.calib.as_deref())?),
        InputMode::Pose => None,
    };
    let hub = HubConfig { input_mode: args.input, calib, record: args.record, ..HubConfig::new(scene) };
    let config = ServiceConfig { ui_dir: args.ui_dir, ..ServiceConfig::new(hub) };
    let addr = SocketAddr::new(args.host, args.port);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let service = Service::start(config, addr).await?;
        tracing::info!("listening on ws://{}/session", service.addr());
        tokio::signal::ctrl_c().await?;
        tracing::info!("shutting down");
        service.shutdown().await?;
        Ok(())
    })
}
