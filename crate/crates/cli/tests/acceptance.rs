//! Acceptance checks, one line per criterion.
//!
//! Every check computes its expected values independently of the code
//! under test (closed-form trajectories, matrix forward kinematics, matrix
//! finite differences, hand-built byte layouts, the hand-traced script) and
//! prints PASS or FAIL with the measured numbers. The process exits with a
//! failure status if any criterion fails.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use dextrain_core::imu::{ImuSample, OrientationFilter, GRAVITY};
use dextrain_core::kinematics::{chain_frames, forward_kinematics, jacobian, solve_ik, IkConfig, InstrumentModel, JointVector, JOINTS};
use dextrain_core::task::{improvement_pct, run_session, EventKind, SceneConfig, SessionReport};
use dextrain_core::teleop::TipTarget;
use dextrain_core::{Side, UnitQuat, Vec3};
use dextrain_io::packet::{ControllerPacket, PacketError, MAGIC, PACKET_LEN};
use dextrain_io::pipeline::{read_pose_csv, TrackRow};
use dextrain_io::report::read_session_report;
use dextrain_io::synth::learner::{run_learner, LearnerConfig};
use dextrain_io::synth::script::Script;
use dextrain_io::synth::{read_truth_csv, PathSpec, TrackingScenario};
use dextrain_io::CalibrationFile;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn dextrain(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_dextrain")).args(args).output().map_err(|e| e.to_string())?;
    ensure(out.status.success(), format!("dextrain {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)))
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

fn workdir() -> tempfile::TempDir {
    tempfile::tempdir().expect("temp dir")
}

// 1. Tracking accuracy

/// World position of an LED on a circle in the tracker frame, evaluated
/// from the closed form and the default mounting (tracker rotated π about
/// X, origin at (0, 0.25, 0.35)).
fn circle_truth(center: [f64; 3], radius: f64, freq_hz: f64, phase: f64, t_s: f64) -> [f64; 3] {
    let phi = TAU * freq_hz * t_s + phase;
    let tracker = [center[0] + radius * phi.cos(), center[1] + radius * phi.sin(), center[2]];
    [tracker[0], 0.25 - tracker[1], 0.35 - tracker[2]]
}

fn dist(a: [f64; 3], b: Vec3) -> f64 {
    ((a[0] - b.x).powi(2) + (a[1] - b.y).powi(2) + (a[2] - b.z).powi(2)).sqrt()
}

struct TrackingErrors {
    raw: [f64; 2],
    smooth: [f64; 2],
    smooth_aligned: [f64; 2],
    frames: usize,
}

/// Per-controller RMSE. The aligned smoothed error compares each smoothed
/// position with the truth `delay` frames earlier: the centre of the
/// moving-average window. The first `delay * 2` frames, while the window
/// fills, are skipped.
fn tracking_errors(rows: &[TrackRow], scenario: &TrackingScenario, delay: usize) -> Result<TrackingErrors, String> {
    let mut times: Vec<u64> = rows.iter().map(|r| r.t_us).collect();
    times.dedup();
    let mut sums = [[0.0; 3]; 2];
    let mut counts = [0usize; 2];
    for (k, &t) in times.iter().enumerate().skip(2 * delay) {
        for r in rows.iter().filter(|r| r.t_us == t) {
            let i = r.controller.index();
            let PathSpec::Circle { center, radius, freq_hz, phase, .. } = scenario.motion[i].path else {
                return Err("expected circular paths".into());
            };
            let c = [center.x, center.y, center.z];
            let now = circle_truth(c, radius, freq_hz, phase, t as f64 * 1e-6);
            let then = circle_truth(c, radius, freq_hz, phase, times[k - delay] as f64 * 1e-6);
            sums[i][0] += dist(now, r.raw).powi(2);
            sums[i][1] += dist(now, r.smooth).powi(2);
            sums[i][2] += dist(then, r.smooth).powi(2);
            counts[i] += 1;
        }
    }
    let rmse = |i: usize, j: usize| (sums[i][j] / counts[i] as f64).sqrt();
    Ok(TrackingErrors {
        raw: [rmse(0, 0), rmse(1, 0)],
        smooth: [rmse(0, 1), rmse(1, 1)],
        smooth_aligned: [rmse(0, 2), rmse(1, 2)],
        frames: times.len(),
    })
}

fn synth_and_track(dir: &Path, noise_px: f64, seed: u64) -> Result<Vec<TrackRow>, String> {
    let noise = noise_px.to_string();
    let seed = seed.to_string();
    dextrain(&["synth", "--scenario", "circle", "--seed", &seed, "--noise-px", &noise, "--out", path(dir)])?;
    let poses = dir.join("poses.csv");
    dextrain(&["track", "--replay", path(&dir.join("replay.jsonl")), "--calib", path(&dir.join("calib.toml")), "--out", path(&poses)])?;
    let rows = read_pose_csv(std::fs::File::open(&poses).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    // the generator's own truth file must agree with the closed form
    let truth = read_truth_csv(std::fs::File::open(dir.join("truth.csv")).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let scenario = TrackingScenario::circle();
    for t in truth.iter().step_by(37) {
        let PathSpec::Circle { center, radius, freq_hz, phase, .. } = scenario.motion[t.controller.index()].path else {
            unreachable!()
        };
        let want = circle_truth([center.x, center.y, center.z], radius, freq_hz, phase, t.t_us as f64 * 1e-6);
        ensure(dist(want, t.position()) < 1e-12, format!("truth.csv disagrees with the closed form at {} µs", t.t_us))?;
    }
    Ok(rows)
}

fn criterion_1() -> Check {
    let calib = CalibrationFile::default();
    ensure(calib.left.width == 640 && calib.left.height == 480, "rig is not 640×480")?;
    ensure((calib.right_in_left.translation.norm() - 0.04).abs() < 1e-15, "baseline is not 0.04 m")?;
    let scenario = TrackingScenario::circle();
    let PathSpec::Circle { center, radius, .. } = scenario.motion[0].path else { return Err("not a circle".into()) };
    ensure(radius == 0.1 && center.z == 0.3 && scenario.duration_s == 10.0 && scenario.frame_hz == 60.0, "scenario mismatch")?;
    let delay = (calib.tracking.smoothing_window - 1) / 2;

    let dir = workdir();
    let start = Instant::now();
    let noiseless = tracking_errors(&synth_and_track(&dir.path().join("clean"), 0.0, 1)?, &scenario, delay)?;
    let clean_time = start.elapsed();
    let start = Instant::now();
    let noisy = tracking_errors(&synth_and_track(&dir.path().join("noisy"), 0.3, 1)?, &scenario, delay)?;
    let noisy_time = start.elapsed();

    let mm = |v: [f64; 2]| format!("{:.3}/{:.3} mm", v[0] * 1e3, v[1] * 1e3);
    let detail = format!(
        "σ=0.3 px smoothed RMSE (vs truth {delay} frames back) L/R {}, unaligned {}, raw {}; noiseless raw RMSE {:.1e}/{:.1e} m; {} frames; runtimes {:.2} s / {:.2} s",
        mm(noisy.smooth_aligned),
        mm(noisy.smooth),
        mm(noisy.raw),
        noiseless.raw[0],
        noiseless.raw[1],
        noisy.frames,
        clean_time.as_secs_f64(),
        noisy_time.as_secs_f64(),
    );
    ensure(noisy.frames == 601, format!("{} frames tracked, expected 601", noisy.frames))?;
    ensure(noisy.smooth_aligned.iter().all(|&e| e < 2e-3), detail.clone())?;
    ensure(noiseless.raw.iter().all(|&e| e < 1e-6), detail.clone())?;
    ensure(noisy_time < Duration::from_secs(10) && clean_time < Duration::from_secs(10), detail.clone())?;
    Ok(detail)
}

// 2–3. Kinematics

type M3 = [[f64; 3]; 3];

fn mul(a: &M3, b: &M3) -> M3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

fn apply(a: &M3, v: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| (0..3).map(|k| a[i][k] * v[k]).sum())
}

fn rx(t: f64) -> M3 {
    [[1.0, 0.0, 0.0], [0.0, t.cos(), -t.sin()], [0.0, t.sin(), t.cos()]]
}

fn ry(t: f64) -> M3 {
    [[t.cos(), 0.0, t.sin()], [0.0, 1.0, 0.0], [-t.sin(), 0.0, t.cos()]]
}

fn rz(t: f64) -> M3 {
    [[t.cos(), -t.sin(), 0.0], [t.sin(), t.cos(), 0.0], [0.0, 0.0, 1.0]]
}

/// Matrix forward kinematics of the RCM instrument: yaw about Y, pitch
/// about X, insertion along Z, roll about Z, wrist pitch about X, wrist yaw
/// about Y, tip offset along Z, from an RCM frame pointing straight down.
fn oracle_fk(m: &InstrumentModel, q: &[f64; JOINTS]) -> ([f64; 3], M3) {
    let base = rx(FRAC_PI_2);
    let shaft = mul(&mul(&base, &ry(q[0])), &rx(q[1]));
    let wrist = mul(&mul(&mul(&shaft, &rz(q[3])), &rx(q[4])), &ry(q[5]));
    let r = m.rcm_pose.translation;
    let a = apply(&shaft, [0.0, 0.0, q[2]]);
    let b = apply(&wrist, [0.0, 0.0, m.tip_length]);
    ([r.x + a[0] + b[0], r.y + a[1] + b[1], r.z + a[2] + b[2]], wrist)
}

fn quat_matrix(q: UnitQuat) -> M3 {
    let [w, x, y, z] = q.to_array();
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

/// Angle of `aᵀ·b`.
fn rotation_angle(a: &M3, b: &M3) -> f64 {
    let trace: f64 = (0..3).map(|i| (0..3).map(|k| a[k][i] * b[k][i]).sum::<f64>()).sum();
    ((trace - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
}

fn random_q(rng: &mut ChaCha8Rng, m: &InstrumentModel, margin: f64) -> JointVector {
    let mut q = [0.0; JOINTS];
    for (i, l) in m.limits.iter().enumerate() {
        q[i] = rng.random_range(l.lo + margin..=l.hi - margin);
    }
    JointVector { q, jaw: 0.0 }
}

fn criterion_2() -> Check {
    let scene = SceneConfig::default();
    let config = IkConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = Instant::now();
    let (mut converged, mut violations) = (0, 0);
    let (mut worst_p, mut worst_r, mut worst_rcm) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..1000 {
        let side = if k % 2 == 0 { Side::Left } else { Side::Right };
        let m = scene.instrument_model(side);
        let truth = random_q(&mut rng, &m, 0.0);
        let (goal_p, goal_r) = oracle_fk(&m, &truth.q);
        let goal = forward_kinematics(&m, &truth).map_err(|e| e.to_string())?;
        let target = TipTarget::new(side, goal, 0.0);
        let sol = solve_ik(&m, &target, &m.home(), &config).map_err(|e| e.to_string())?;
        if !sol.joints.q.iter().zip(&m.limits).all(|(v, l)| *v >= l.lo && *v <= l.hi) {
            violations += 1;
        }
        if sol.converged {
            converged += 1;
            let (p, r) = oracle_fk(&m, &sol.joints.q);
            worst_p = worst_p.max(((p[0] - goal_p[0]).powi(2) + (p[1] - goal_p[1]).powi(2) + (p[2] - goal_p[2]).powi(2)).sqrt());
            worst_r = worst_r.max(rotation_angle(&r, &goal_r));
            let f = chain_frames(&m, &sol.joints).map_err(|e| e.to_string())?;
            // distance from the RCM point to the shaft line through the wrist
            let off = f.rcm - f.wrist;
            let along = off.dot(f.shaft);
            worst_rcm = worst_rcm.max((off - f.shaft * along).norm());
        }
    }
    let elapsed = start.elapsed();
    let detail = format!(
        "{converged}/1000 converged, worst FK error {worst_p:.2e} m / {worst_r:.2e} rad, {violations} limit violations, worst RCM residual {worst_rcm:.1e} m, {:.2} s",
        elapsed.as_secs_f64()
    );
    ensure(converged >= 990 && worst_p < 1e-4 && worst_r < 1e-3, detail.clone())?;
    ensure(violations == 0 && worst_rcm < 1e-9 && elapsed < Duration::from_secs(5), detail.clone())?;
    Ok(detail)
}

fn criterion_3() -> Check {
    let m = SceneConfig::default().instrument_model(Side::Left);
    let h = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let q = random_q(&mut rng, &m, 2.0 * h);
        let j = jacobian(&m, &q).map_err(|e| e.to_string())?;
        for i in 0..JOINTS {
            let (mut qp, mut qm) = (q.q, q.q);
            qp[i] += h;
            qm[i] -= h;
            let (pp, rp) = oracle_fk(&m, &qp);
            let (pm, rm) = oracle_fk(&m, &qm);
            let (_, r0) = oracle_fk(&m, &q.q);
            // ω from the skew part of Ṙ·Rᵀ
            let mut rdot = [[0.0; 3]; 3];
            for a in 0..3 {
                for b in 0..3 {
                    rdot[a][b] = (rp[a][b] - rm[a][b]) / (2.0 * h);
                }
            }
            let r0t = [0, 1, 2].map(|a| [0, 1, 2].map(|b| r0[b][a]));
            let w = mul(&rdot, &r0t);
            let omega = [(w[2][1] - w[1][2]) / 2.0, (w[0][2] - w[2][0]) / 2.0, (w[1][0] - w[0][1]) / 2.0];
            for r in 0..3 {
                worst = worst.max((j[(r, i)] - (pp[r] - pm[r]) / (2.0 * h)).abs());
                worst = worst.max((j[(r + 3, i)] - omega[r]).abs());
            }
        }
    }
    let detail = format!("max |J − J_fd| = {worst:.2e} over 100 configurations (h = 1e-6)");
    ensure(worst < 1e-5, detail.clone())?;
    Ok(detail)
}

// 4. Orientation filter

/// Body-frame "up" of `q`, rotated by hand: qᵀ·Y.
fn up_in_body(q: UnitQuat) -> [f64; 3] {
    let r = quat_matrix(q);
    [r[1][0], r[1][1], r[1][2]]
}

fn criterion_4() -> Check {
    let tilt = 30f64.to_radians();
    let true_up = [tilt.sin(), tilt.cos(), 0.0];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let noise = Normal::new(0.0, 0.05).map_err(|e| e.to_string())?;
    let bias = Vec3::new(0.01, 0.01, 0.01);
    let mut f = OrientationFilter::with_orientation(UnitQuat::IDENTITY, 0.02, 0);
    let mut worst_after_5s = 0.0f64;
    let mut first_err = 0.0;
    for i in 1..=3000u64 {
        let accel = Vec3::new(
            true_up[0] * GRAVITY + noise.sample(&mut rng),
            true_up[1] * GRAVITY + noise.sample(&mut rng),
            noise.sample(&mut rng),
        );
        f.update(&ImuSample { t_us: i * 10_000, gyro: bias, accel }).map_err(|e| e.to_string())?;
        let est = up_in_body(f.q);
        let cos = est[0] * true_up[0] + est[1] * true_up[1] + est[2] * true_up[2];
        let err = cos.clamp(-1.0, 1.0).acos().to_degrees();
        if i == 1 {
            first_err = err;
        }
        if i > 500 {
            worst_after_5s = worst_after_5s.max(err);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut g = OrientationFilter::with_orientation(UnitQuat::IDENTITY, 0.0, 0);
    let mut integrated = UnitQuat::IDENTITY;
    let mut bitwise = true;
    for i in 1..=1000u64 {
        let gyro = Vec3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let accel = Vec3::new(0.0, GRAVITY, 0.0);
        g.update(&ImuSample { t_us: i * 10_000, gyro, accel }).map_err(|e| e.to_string())?;
        integrated = integrated.integrate(gyro, 0.01);
        bitwise &= g.q.to_array() == integrated.to_array();
    }
    let detail = format!(
        "30° tilt, σa=0.05 m/s², bias 0.01 rad/s, α=0.02: start {first_err:.1}°, worst after 5 s {worst_after_5s:.3}° over 30 s; α=0 bitwise pure integration: {bitwise}"
    );
    ensure(worst_after_5s < 1.0 && bitwise, detail.clone())?;
    Ok(detail)
}

// 5. Determinism

fn run_twice(dir: &Path, replay: &Path, extra: &[&str]) -> Result<(Vec<u8>, Vec<u8>), String> {
    let mut outputs = Vec::new();
    for k in 0..2 {
        let report = dir.join(format!("report{k}.json"));
        let events = dir.join(format!("events{k}.jsonl"));
        let mut args = vec!["run", "--replay", path(replay), "--report", path(&report), "--events", path(&events)];
        args.extend_from_slice(extra);
        dextrain(&args)?;
        outputs.push((std::fs::read(&report).map_err(|e| e.to_string())?, std::fs::read(&events).map_err(|e| e.to_string())?));
    }
    ensure(outputs[0] == outputs[1], format!("{} differs between runs", replay.display()))?;
    ensure(!outputs[0].0.is_empty() && !outputs[0].1.is_empty(), "empty output")?;
    Ok(outputs.swap_remove(0))
}

fn criterion_5() -> Check {
    let dir = workdir();
    let tracking = dir.path().join("tracking");
    dextrain(&["synth", "--scenario", "circle", "--seed", "5", "--noise-px", "0.3", "--gyro-sigma", "0.01", "--out", path(&tracking)])?;
    let short_scene = dir.path().join("scene.toml");
    std::fs::write(&short_scene, "[protocol]\nfamiliarization_s = 2.0\ntrial_s = 3.0\ntrials = 2\nbreak_s = 1.0\n").map_err(|e| e.to_string())?;
    let (a_report, a_events) = run_twice(
        &tracking,
        &tracking.join("replay.jsonl"),
        &["--calib", path(&tracking.join("calib.toml")), "--scene", path(&short_scene)],
    )?;

    let learner = dir.path().join("learner");
    dextrain(&["synth", "--scenario", "learner", "--seed", "5", "--out", path(&learner)])?;
    let (b_report, b_events) = run_twice(&learner, &learner.join("replay.jsonl"), &["--scene", path(&learner.join("scene.toml"))])?;
    let live = std::fs::read(learner.join("report.json")).map_err(|e| e.to_string())?;
    ensure(live == b_report, "learner report differs from its replayed report")?;
    Ok(format!(
        "tracking replay: {} B report, {} B events; learner replay: {} B report, {} B events; byte-identical across runs and equal to the live learner report",
        a_report.len(),
        a_events.len(),
        b_report.len(),
        b_events.len()
    ))
}

// 6. Scripted-session oracle

fn criterion_6() -> Check {
    let script_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/scripts/handover_oracle.toml");
    let script = Script::load(&script_path).map_err(|e| e.to_string())?;
    let expected = script.expected.ok_or("script carries no expected block")?;
    let dir = workdir();
    dextrain(&["synth", "--scenario", "scripted", "--out", path(dir.path())])?;
    let report_path = dir.path().join("scripted.json");
    dextrain(&[
        "run",
        "--replay",
        path(&dir.path().join("replay.jsonl")),
        "--scene",
        path(&dir.path().join("scene.toml")),
        "--report",
        path(&report_path),
    ])?;
    let report = read_session_report(&report_path).map_err(|e| e.to_string())?;
    let t = report.trials.first().ok_or("no trial in report")?;
    let avg = t.avg_transfer_time_s.unwrap_or(f64::NAN);
    let detail = format!(
        "transfers {} (want {}), drops {} (want {}), mean transfer {avg:.6} s (want {} ± 0.001), path {:.6} m (want {:.6} ± 1e-6)",
        t.transfers, expected.transfers, t.drops, expected.drops, expected.mean_transfer_time_s, t.total_path_length_m, expected.path_length_m
    );
    ensure(report.trials.len() == 1 && !t.truncated_input, detail.clone())?;
    ensure(t.transfers == expected.transfers && t.drops == expected.drops, detail.clone())?;
    ensure((avg - expected.mean_transfer_time_s).abs() <= 1e-3, detail.clone())?;
    ensure((t.total_path_length_m - expected.path_length_m).abs() <= 1e-6, detail.clone())?;
    Ok(detail)
}

// 7. Learning trend

fn criterion_7() -> Check {
    let scene = SceneConfig::default();
    let run = run_learner(&scene, &LearnerConfig::default(), 7);
    let r: &SessionReport = &run.report;
    ensure(r.trials.len() == 3, format!("{} trials", r.trials.len()))?;
    let transfers: Vec<u32> = r.trials.iter().map(|t| t.transfers).collect();
    let drops: Vec<u32> = r.trials.iter().map(|t| t.drops).collect();

    let mut pct_ok = true;
    for (imp, t) in r.improvements.iter().zip(&r.trials[1..]) {
        let want = |first: u32, now: u32| (first != 0).then(|| 100.0 * (now as f64 - first as f64) / first as f64);
        pct_ok &= imp.trial_id == t.trial_id;
        pct_ok &= imp.transfers_change_pct == want(transfers[0], t.transfers);
        pct_ok &= imp.drops_change_pct == want(drops[0], t.drops);
    }
    let worked = (improvement_pct(100.0, 108.0), improvement_pct(100.0, 121.0));
    let replayed = run_session(scene, run.inputs);
    let detail = format!(
        "transfers {transfers:?}, drops {drops:?}, change {:?} / {:?} %; 100→108→121 gives {:?} / {:?} %; replay matches: {}",
        r.improvements.iter().map(|i| i.transfers_change_pct).collect::<Vec<_>>(),
        r.improvements.iter().map(|i| i.drops_change_pct).collect::<Vec<_>>(),
        worked.0,
        worked.1,
        replayed == *r
    );
    ensure(transfers.windows(2).all(|w| w[0] <= w[1]), detail.clone())?;
    ensure(drops.windows(2).all(|w| w[0] >= w[1]), detail.clone())?;
    ensure(transfers[2] > transfers[0], detail.clone())?;
    ensure(pct_ok && worked == (Some(8.0), Some(21.0)) && replayed == *r, detail.clone())?;
    Ok(detail)
}

// 8. Codec

/// The wire layout written out field by field.
fn hand_encode(id: u8, seq: u16, t_us: u64, floats: &[f32; 6], buttons: u8, jaw: f32) -> Vec<u8> {
    let mut out = vec![0xC7, id];
    out.extend(seq.to_le_bytes());
    out.extend(t_us.to_le_bytes());
    for f in floats {
        out.extend(f.to_bits().to_le_bytes());
    }
    out.push(buttons);
    out.extend(jaw.to_bits().to_le_bytes());
    out
}

fn criterion_8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10_000 {
        let floats: [f32; 6] = std::array::from_fn(|_| rng.random_range(-40.0f32..40.0));
        let p = ControllerPacket {
            id: rng.random_range(0..2),
            seq: rng.random(),
            t_us: rng.random(),
            gyro: [floats[0], floats[1], floats[2]],
            accel: [floats[3], floats[4], floats[5]],
            buttons: rng.random(),
            jaw: rng.random_range(0.0f32..=1.0),
        };
        let bytes = p.encode();
        ensure(bytes.len() == PACKET_LEN, "encoded size is not 41")?;
        ensure(bytes.to_vec() == hand_encode(p.id, p.seq, p.t_us, &floats, p.buttons, p.jaw), format!("layout mismatch for {p:?}"))?;
        ensure(ControllerPacket::decode(&bytes) == Ok(p), format!("round trip failed for {p:?}"))?;

        // any buffer with the magic byte decodes and re-encodes unchanged
        let mut raw = [0u8; PACKET_LEN];
        rng.fill_bytes(&mut raw);
        raw[0] = MAGIC;
        let decoded = ControllerPacket::decode(&raw).map_err(|e| e.to_string())?;
        ensure(decoded.encode() == raw, "raw buffer did not re-encode byte-exact")?;

        let cut = rng.random_range(0..PACKET_LEN);
        ensure(ControllerPacket::decode(&bytes[..cut]) == Err(PacketError::Length(cut)), "truncated buffer accepted")?;
        let mut bad = bytes;
        bad[0] = rng.random_range(0..=0xC6);
        ensure(matches!(ControllerPacket::decode(&bad), Err(PacketError::Magic(_))), "bad magic accepted")?;
    }
    Ok("10000 seeded packets: 41 bytes, hand layout matches, exact round trip; 10000 random magic-valid buffers re-encode byte-exact; truncated and bad-magic buffers rejected".into())
}

// 9. Trial protocol

fn criterion_9() -> Check {
    let scene = SceneConfig::default();
    let learner = run_learner(&scene, &LearnerConfig::default(), 9).report;
    let idle = run_session(scene, []);
    let mut details = Vec::new();
    for (name, r) in [("learner", &learner), ("no input", &idle)] {
        ensure(r.trials.len() == 3, format!("{name}: {} trials", r.trials.len()))?;
        for t in &r.trials {
            let last = t.events.iter().map(|e| e.t_us).max().unwrap_or(0);
            ensure(last <= 180_000_000, format!("{name}: trial {} has an event at {last} µs", t.trial_id))?;
            ensure(t.duration_s == 180.0, format!("{name}: trial {} lasted {} s", t.trial_id, t.duration_s))?;
            ensure(matches!(t.events.last().map(|e| &e.kind), Some(EventKind::TrialEnd { .. })), "trial does not end with trial_end")?;
        }
        let events: usize = r.trials.iter().map(|t| t.events.len()).sum();
        details.push(format!("{name}: 3 trials of 180 s, {events} events, latest at ≤ 180.000000 s"));
    }
    Ok(details.join("; "))
}

fn main() {
    let checks: [(u32, &str, fn() -> Check); 9] = [
        (1, "tracking accuracy", criterion_1),
        (2, "IK round trip", criterion_2),
        (3, "Jacobian vs finite differences", criterion_3),
        (4, "orientation filter", criterion_4),
        (5, "replay determinism", criterion_5),
        (6, "scripted-session oracle", criterion_6),
        (7, "learning trend", criterion_7),
        (8, "packet codec", criterion_8),
        (9, "trial protocol", criterion_9),
    ];
    let only: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = Vec::new();
    for (n, name, check) in checks {
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {n} PASS  {name}: {detail} [{secs:.2} s]"),
            Err(detail) => {
                println!("criterion {n} FAIL  {name}: {detail} [{secs:.2} s]");
                failed.push(n);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
