//! Seeded synthetic recordings with ground truth.
//!
//! [`synth_tracking`] moves both controllers along parametric paths,
//! projects their LEDs through the calibrated rig (as blob records or as
//! rendered PGM frames) and emits matching IMU packets. [`script`] turns a
//! hand-written task script into controller inputs and [`learner`] plays
//! whole sessions as a simulated trainee. All randomness comes from one
//! 64-bit seed.

pub mod learner;
pub mod script;

use std::path::Path;

use dextrain_core::imu::GRAVITY;
use dextrain_core::task::{ControllerInput, InputPose};
use dextrain_core::tracking::{IrFrame, StereoRig};
use dextrain_core::{Micros, PinholeCamera, Side, UnitQuat, Vec3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calib::CalibrationFile;
use crate::packet::ControllerPacket;
use crate::replay::{BlobRecord, FrameRecord, ReplayRecord};
use crate::IoError;

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("{controller} LED leaves the {camera} camera's view at t = {t_us} µs")]
    OutOfFrustum { t_us: Micros, controller: Side, camera: &'static str },
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{0}")]
    Invalid(String),
}

/// LED path in the tracker (left camera) frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathSpec {
    Static { p: Vec3 },
    /// `center + r(cos φ·u + sin φ·v)` with `φ = 2π·f·t + phase`.
    Circle { center: Vec3, radius: f64, freq_hz: f64, phase: f64, u: Vec3, v: Vec3 },
}

impl PathSpec {
    pub fn at(&self, t: f64) -> Vec3 {
        match *self {
            PathSpec::Static { p } => p,
            PathSpec::Circle { center, radius, freq_hz, phase, u, v } => {
                let phi = std::f64::consts::TAU * freq_hz * t + phase;
                center + (u * phi.cos() + v * phi.sin()) * radius
            }
        }
    }
}

/// Body→world orientation `R_axis(amp·sin(2π·f·t + phase)) · q0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwingSpec {
    pub q0: UnitQuat,
    /// World-frame unit axis.
    pub axis: Vec3,
    pub amplitude: f64,
    pub freq_hz: f64,
    pub phase: f64,
}

impl SwingSpec {
    pub fn fixed(q0: UnitQuat) -> Self {
        Self { q0, axis: Vec3::Y, amplitude: 0.0, freq_hz: 0.0, phase: 0.0 }
    }

    fn angle(&self, t: f64) -> f64 {
        self.amplitude * (std::f64::consts::TAU * self.freq_hz * t + self.phase).sin()
    }

    fn rate(&self, t: f64) -> f64 {
        let w = std::f64::consts::TAU * self.freq_hz;
        self.amplitude * w * (w * t + self.phase).cos()
    }

    pub fn at(&self, t: f64) -> UnitQuat {
        UnitQuat::from_rotation_vector(self.axis * self.angle(t)) * self.q0
    }

    /// Body-frame rate averaged over `(t0, t1]`, which integrates to the
    /// exact orientation change. With `t0 == t1` it is the instantaneous
    /// rate.
    pub fn body_rate(&self, t0: f64, t1: f64) -> Vec3 {
        let body_axis = self.q0.inverse().rotate(self.axis);
        let rate = if t1 > t0 { (self.angle(t1) - self.angle(t0)) / (t1 - t0) } else { self.rate(t1) };
        body_axis * rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerMotion {
    pub path: PathSpec,
    pub orientation: SwingSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Blob centroid noise per image axis.
    pub pixel_sigma: f64,
    pub gyro_sigma: f64,
    pub gyro_bias: Vec3,
    pub accel_sigma: f64,
}

impl NoiseSpec {
    pub fn pixels(sigma: f64) -> Self {
        Self { pixel_sigma: sigma, ..Self::default() }
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self { pixel_sigma: 0.0, gyro_sigma: 0.0, gyro_bias: Vec3::ZERO, accel_sigma: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingScenario {
    pub motion: [ControllerMotion; 2],
    pub duration_s: f64,
    pub frame_hz: f64,
    pub imu_hz: f64,
    /// Render Gaussian spots into PGM frames instead of emitting blobs.
    pub render_frames: bool,
    pub spot_sigma_px: f64,
}

impl TrackingScenario {
    /// Both LEDs held still at 0.3 m.
    pub fn static_pose() -> Self {
        let q = UnitQuat::IDENTITY;
        Self::with_motion([
            ControllerMotion { path: PathSpec::Static { p: Vec3::new(-0.05, 0.01, 0.30) }, orientation: SwingSpec::fixed(q) },
            ControllerMotion { path: PathSpec::Static { p: Vec3::new(0.07, -0.01, 0.32) }, orientation: SwingSpec::fixed(q) },
        ])
    }

    /// Left LED on a 0.1 m circle at 0.5 Hz in the plane 0.3 m in front of
    /// the rig; right LED on a small, slower circle beside it. Both wrists
    /// swing about fixed axes.
    pub fn circle() -> Self {
        let tilt = UnitQuat::from_axis_angle(Vec3::X, -0.3).expect("unit axis");
        let axis = Vec3::new(0.3, 1.0, 0.2).normalized().expect("nonzero");
        Self::with_motion([
            ControllerMotion {
                path: PathSpec::Circle {
                    center: Vec3::new(-0.04, 0.0, 0.30),
                    radius: 0.1,
                    freq_hz: 0.5,
                    phase: 0.0,
                    u: Vec3::X,
                    v: Vec3::Y,
                },
                orientation: SwingSpec { q0: tilt, axis, amplitude: 0.4, freq_hz: 0.2, phase: 0.0 },
            },
            ControllerMotion {
                path: PathSpec::Circle {
                    center: Vec3::new(0.13, 0.0, 0.30),
                    radius: 0.03,
                    freq_hz: 0.25,
                    phase: 1.0,
                    u: Vec3::X,
                    v: Vec3::Y,
                },
                orientation: SwingSpec { q0: UnitQuat::IDENTITY, axis: Vec3::X, amplitude: 0.3, freq_hz: 0.15, phase: 1.0 },
            },
        ])
    }

    fn with_motion(motion: [ControllerMotion; 2]) -> Self {
        Self { motion, duration_s: 10.0, frame_hz: 60.0, imu_hz: 100.0, render_frames: false, spot_sigma_px: 2.0 }
    }

    pub fn frame_times(&self) -> Vec<Micros> {
        sample_times(self.duration_s, self.frame_hz)
    }

    pub fn imu_times(&self) -> Vec<Micros> {
        sample_times(self.duration_s, self.imu_hz)
    }
}

/// `round(k·10⁶/hz)` for every k with a time not past the duration.
fn sample_times(duration_s: f64, hz: f64) -> Vec<Micros> {
    let end = (duration_s * 1e6).round() as Micros;
    (0..)
        .map(|k: u64| (k as f64 * 1e6 / hz).round() as Micros)
        .take_while(|&t| t <= end)
        .collect()
}

fn secs(t_us: Micros) -> f64 {
    t_us as f64 * 1e-6
}

/// Ground-truth pose of one controller: LED position and body→world
/// orientation, both in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub t_us: Micros,
    pub controller: Side,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub qw: f64,
    pub qx: f64,
    pub qy: f64,
    pub qz: f64,
}

impl TruthRow {
    pub fn new(t_us: Micros, controller: Side, p: Vec3, q: UnitQuat) -> Self {
        let [qw, qx, qy, qz] = q.to_array();
        Self { t_us, controller, x: p.x, y: p.y, z: p.z, qw, qx, qy, qz }
    }

    pub fn position(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn orientation(&self) -> UnitQuat {
        UnitQuat::try_from([self.qw, self.qx, self.qy, self.qz]).unwrap_or_default()
    }
}

/// A generated recording. Rendered frames are kept in memory until
/// [`SynthOutput::write`] puts them next to the replay file.
#[derive(Debug, Clone, Default)]
pub struct SynthOutput {
    pub records: Vec<ReplayRecord>,
    pub truth: Vec<TruthRow>,
    pub frames: Vec<(String, IrFrame)>,
}

pub const REPLAY_FILE: &str = "replay.jsonl";
pub const TRUTH_FILE: &str = "truth.csv";

impl SynthOutput {
    pub fn write(&self, dir: &Path) -> Result<(), IoError> {
        std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
        crate::replay::write_replay(&dir.join(REPLAY_FILE), &self.records)?;
        let truth_path = dir.join(TRUTH_FILE);
        let f = std::fs::File::create(&truth_path).map_err(|e| IoError::io(&truth_path, e))?;
        write_truth_csv(f, &self.truth)?;
        for (rel, frame) in &self.frames {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| IoError::io(parent, e))?;
            }
            crate::pgm::write_pgm(&path, frame)?;
        }
        Ok(())
    }
}

pub fn write_truth_csv<W: std::io::Write>(out: W, rows: &[TruthRow]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| IoError::Invalid(e.to_string()))?;
    }
    w.flush().map_err(|e| IoError::Invalid(e.to_string()))
}

pub fn read_truth_csv<R: std::io::Read>(input: R) -> Result<Vec<TruthRow>, IoError> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(|e| IoError::Parse(e.to_string())))
        .collect()
}

fn visible(cam: &PinholeCamera, p: Vec3) -> Option<(f64, f64)> {
    cam.project(p).ok().filter(|&(u, v)| cam.contains_pixel(u, v))
}

/// Generates blob (or frame) records, IMU packets and ground truth for a
/// two-controller tracking scenario.
pub fn synth_tracking(
    scenario: &TrackingScenario,
    calib: &CalibrationFile,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<SynthOutput, SynthError> {
    let rig = calib.rig()?;
    let to_world = calib.tracker_to_world;
    let mut rng = rng(seed);
    let pixel = Normal::new(0.0, noise.pixel_sigma.max(0.0)).map_err(|e| SynthError::Invalid(e.to_string()))?;
    let gyro_noise = Normal::new(0.0, noise.gyro_sigma.max(0.0)).map_err(|e| SynthError::Invalid(e.to_string()))?;
    let accel_noise = Normal::new(0.0, noise.accel_sigma.max(0.0)).map_err(|e| SynthError::Invalid(e.to_string()))?;

    let mut out = SynthOutput::default();
    let mut stream: Vec<ReplayRecord> = Vec::new();

    for (k, &t_us) in scenario.frame_times().iter().enumerate() {
        let t = secs(t_us);
        let mut left = Vec::new();
        let mut right = Vec::new();
        for side in Side::BOTH {
            let m = &scenario.motion[side.index()];
            let p = m.path.at(t);
            let (ul, vl) = visible(&rig.left, p).ok_or(SynthError::OutOfFrustum { t_us, controller: side, camera: "left" })?;
            let (ur, vr) = visible(&rig.right, p).ok_or(SynthError::OutOfFrustum { t_us, controller: side, camera: "right" })?;
            left.push([ul + pixel.sample(&mut rng), vl + pixel.sample(&mut rng)]);
            right.push([ur + pixel.sample(&mut rng), vr + pixel.sample(&mut rng)]);
            out.truth.push(TruthRow::new(t_us, side, to_world.transform_point(p), m.orientation.at(t)));
        }
        if scenario.render_frames {
            let names = [format!("frames/{k:06}_l.pgm"), format!("frames/{k:06}_r.pgm")];
            let images = [render(&rig.left, t_us, &left, scenario.spot_sigma_px), render(&rig.right, t_us, &right, scenario.spot_sigma_px)];
            stream.push(ReplayRecord::Frame(FrameRecord { t_us, left: names[0].clone(), right: names[1].clone() }));
            out.frames.extend(names.into_iter().zip(images));
        } else {
            stream.push(ReplayRecord::Blobs(BlobRecord { t_us, left, right }));
        }
    }

    let imu_times = scenario.imu_times();
    for (k, &t_us) in imu_times.iter().enumerate() {
        let t = secs(t_us);
        let t_prev = if k == 0 { t } else { secs(imu_times[k - 1]) };
        for side in Side::BOTH {
            let swing = &scenario.motion[side.index()].orientation;
            let q = swing.at(t);
            let noisy = |v: Vec3, d: &Normal<f64>, rng: &mut Rng| Vec3::new(v.x + d.sample(rng), v.y + d.sample(rng), v.z + d.sample(rng));
            let gyro = noisy(swing.body_rate(t_prev, t) + noise.gyro_bias, &gyro_noise, &mut rng);
            let accel = noisy(q.inverse().rotate(Vec3::new(0.0, GRAVITY, 0.0)), &accel_noise, &mut rng);
            let f = |v: Vec3| [v.x as f32, v.y as f32, v.z as f32];
            stream.push(ReplayRecord::Imu(ControllerPacket {
                id: side.index() as u8,
                seq: k as u16,
                t_us,
                gyro: f(gyro),
                accel: f(accel),
                buttons: 0,
                jaw: 0.0,
            }));
            let p = scenario.motion[side.index()].path.at(t);
            out.truth.push(TruthRow::new(t_us, side, to_world.transform_point(p), q));
        }
    }

    crate::replay::sort_records(&mut stream);
    out.records = stream;
    out.truth.sort_by_key(|r| (r.t_us, r.controller));
    out.truth.dedup_by_key(|r| (r.t_us, r.controller));
    Ok(out)
}

/// Gaussian spots of peak 255 centered on the given pixel positions.
pub fn render(cam: &PinholeCamera, t_us: Micros, centers: &[[f64; 2]], sigma_px: f64) -> IrFrame {
    let (w, h) = (cam.width as usize, cam.height as usize);
    let mut frame = IrFrame::dark(t_us, w, h);
    let reach = (4.0 * sigma_px).ceil() as i64;
    for &[u, v] in centers {
        let (cu, cv) = (u.round() as i64, v.round() as i64);
        for row in (cv - reach).max(0)..=(cv + reach).min(h as i64 - 1) {
            for col in (cu - reach).max(0)..=(cu + reach).min(w as i64 - 1) {
                let d2 = (col as f64 - u).powi(2) + (row as f64 - v).powi(2);
                let add = 255.0 * (-d2 / (2.0 * sigma_px * sigma_px)).exp();
                let (c, r) = (col as usize, row as usize);
                let value = (frame.get(c, r) as f64 + add).round().min(255.0);
                frame.set(c, r, value as u8);
            }
        }
    }
    frame
}

/// Controller poses that move a tip by `tip − tip_home` through a
/// translation scale, starting from `origin`.
pub(crate) fn controller_input(
    t_us: Micros,
    side: Side,
    origin: Vec3,
    tip: Vec3,
    tip_home: Vec3,
    scale: f64,
    jaw: f64,
) -> ControllerInput {
    ControllerInput {
        t_us,
        controller: side,
        pose: Some(InputPose { p: origin + (tip - tip_home) / scale, q: UnitQuat::IDENTITY }),
        button: false,
        jaw,
    }
}

/// Names accepted by `synth --scenario`.
pub const SCENARIOS: [&str; 4] = ["static", "circle", "scripted", "learner"];

/// The rig used by the tracking scenarios.
pub fn default_rig() -> StereoRig {
    CalibrationFile::default().rig().expect("default calibration is valid")
}
