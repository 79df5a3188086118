//! Master-side teleoperation: 6-DoF controller poses, the clutch and
//! camera-adjust state machine, and the scaled mapping from controller
//! motion to instrument tip targets.
//!
//! A held button clutches that controller's instrument. Holding both
//! buttons enters camera-adjust mode, where moving the two controllers
//! relative to each other drags the scene. Releasing a button re-anchors
//! the controller at its current pose so the instrument never jumps.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tracking::{MarkerTrack, TrackStatus};
use crate::{Micros, RigidTransform, Side, UnitQuat, Vec3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TeleopError {
    #[error("{0} controller track is lost")]
    StalePose(Side),
    #[error("{0} controller is not engaged")]
    NotEngaged(Side),
    #[error("{0} controller has no anchor yet")]
    NoAnchor(Side),
    #[error("camera adjust is not active")]
    NotInCameraAdjust,
}

/// Desired world pose of an instrument tip plus its jaw command
/// (0 = open, 1 = closed).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TipTarget {
    pub instrument_id: Side,
    pub pose: RigidTransform,
    pub jaw_command: f64,
}

impl TipTarget {
    pub fn new(instrument_id: Side, pose: RigidTransform, jaw_command: f64) -> Self {
        Self { instrument_id, pose, jaw_command: clamp_jaw(jaw_command) }
    }
}

fn clamp_jaw(j: f64) -> f64 {
    if j.is_nan() {
        0.0
    } else {
        j.clamp(0.0, 1.0)
    }
}

/// Fused world pose of one hand-held controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerPose {
    pub controller_id: Side,
    pub position: Vec3,
    pub orientation: UnitQuat,
    /// LED → grip point lever arm, body frame.
    pub grip_point_offset: Vec3,
    pub t_us: Micros,
}

/// Combines the smoothed LED position with the IMU orientation.
///
/// The position is moved from the LED to the grip point by rotating the
/// body-frame lever arm into the world.
pub fn fuse_pose(
    track: &MarkerTrack,
    orientation: UnitQuat,
    tracker_to_world: &RigidTransform,
    grip_point_offset: Vec3,
    t_us: Micros,
) -> Result<ControllerPose, TeleopError> {
    if track.status == TrackStatus::Lost {
        return Err(TeleopError::StalePose(track.controller_id));
    }
    let led = tracker_to_world.transform_point(track.position_smoothed);
    Ok(ControllerPose {
        controller_id: track.controller_id,
        position: led + orientation.rotate(grip_point_offset),
        orientation,
        grip_point_offset,
        t_us,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerMode {
    Engaged,
    Clutched,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlobalMode {
    Normal,
    CameraAdjust,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TeleopConfig {
    pub translation_scale: f64,
    pub camera_translation_scale: f64,
    /// Below this controller separation the camera rotation is frozen.
    pub min_camera_separation_m: f64,
    pub grip_point_offset: Vec3,
}

impl Default for TeleopConfig {
    fn default() -> Self {
        Self {
            translation_scale: 0.5,
            camera_translation_scale: 1.0,
            min_camera_separation_m: 0.01,
            grip_point_offset: Vec3::ZERO,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub controller_position: Vec3,
    pub controller_orientation: UnitQuat,
    pub tip: RigidTransform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraAnchor {
    pub midpoint: Vec3,
    pub separation: Vec3,
    pub camera: RigidTransform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeChange {
    Clutched,
    Engaged,
    CameraAdjustEntered,
    CameraAdjustExited,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeEvent {
    /// `None` for global (camera) transitions.
    pub side: Option<Side>,
    pub change: ModeChange,
}

/// One tick of master input. `None` poses mean the controller is not
/// currently tracked.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TeleopInput {
    pub poses: [Option<ControllerPose>; 2],
    pub buttons: [bool; 2],
    pub jaw: [Option<f64>; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeleopOutput {
    pub targets: [TipTarget; 2],
    pub camera_pose: RigidTransform,
    pub events: Vec<ModeEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeleopState {
    config: TeleopConfig,
    modes: [ControllerMode; 2],
    global: GlobalMode,
    buttons: [bool; 2],
    anchors: [Option<Anchor>; 2],
    camera_anchor: Option<CameraAnchor>,
    camera_pose: RigidTransform,
    targets: [TipTarget; 2],
    last_pose: [Option<ControllerPose>; 2],
}

impl TeleopState {
    pub fn new(config: TeleopConfig, initial_tips: [RigidTransform; 2], camera_pose: RigidTransform) -> Self {
        Self {
            config,
            modes: [ControllerMode::Engaged; 2],
            global: GlobalMode::Normal,
            buttons: [false; 2],
            anchors: [None; 2],
            camera_anchor: None,
            camera_pose,
            targets: [
                TipTarget::new(Side::Left, initial_tips[0], 0.0),
                TipTarget::new(Side::Right, initial_tips[1], 0.0),
            ],
            last_pose: [None; 2],
        }
    }

    pub fn config(&self) -> &TeleopConfig {
        &self.config
    }

    pub fn mode(&self, side: Side) -> ControllerMode {
        self.modes[side.index()]
    }

    pub fn global_mode(&self) -> GlobalMode {
        self.global
    }

    pub fn anchor(&self, side: Side) -> Option<Anchor> {
        self.anchors[side.index()]
    }

    pub fn camera_pose(&self) -> RigidTransform {
        self.camera_pose
    }

    pub fn targets(&self) -> [TipTarget; 2] {
        self.targets
    }

    pub fn target(&self, side: Side) -> TipTarget {
        self.targets[side.index()]
    }

    /// Replaces the held tip targets (e.g. after a scene reset) and drops
    /// the anchors so the next pose re-anchors.
    pub fn reset_targets(&mut self, tips: [RigidTransform; 2]) {
        for side in Side::BOTH {
            let t = &mut self.targets[side.index()];
            t.pose = tips[side.index()];
            t.jaw_command = 0.0;
        }
        self.anchors = [None; 2];
    }

    fn anchor_now(&mut self, side: Side) {
        let i = side.index();
        self.anchors[i] = self.last_pose[i].map(|p| Anchor {
            controller_position: p.position,
            controller_orientation: p.orientation,
            tip: self.targets[i].pose,
        });
    }

    /// Re-anchors every engaged controller at its latest pose.
    pub fn reanchor_all(&mut self) {
        for side in Side::BOTH {
            if self.modes[side.index()] == ControllerMode::Engaged {
                self.anchor_now(side);
            }
        }
    }

    /// Applies the button rule table: held ⇒ clutched, both held ⇒ camera
    /// adjust, release ⇒ re-anchor and engage.
    pub fn update_mode(&mut self, buttons: [bool; 2]) -> Vec<ModeEvent> {
        let mut events = Vec::new();
        for side in Side::BOTH {
            let i = side.index();
            let want = if buttons[i] { ControllerMode::Clutched } else { ControllerMode::Engaged };
            if want != self.modes[i] {
                self.modes[i] = want;
                if want == ControllerMode::Engaged {
                    self.anchor_now(side);
                }
                let change = if want == ControllerMode::Engaged { ModeChange::Engaged } else { ModeChange::Clutched };
                events.push(ModeEvent { side: Some(side), change });
            }
        }
        let want_global = if buttons[0] && buttons[1] { GlobalMode::CameraAdjust } else { GlobalMode::Normal };
        if want_global != self.global {
            self.global = want_global;
            match want_global {
                GlobalMode::CameraAdjust => {
                    self.camera_anchor = None;
                    self.capture_camera_anchor();
                    events.push(ModeEvent { side: None, change: ModeChange::CameraAdjustEntered });
                }
                GlobalMode::Normal => {
                    self.camera_anchor = None;
                    events.push(ModeEvent { side: None, change: ModeChange::CameraAdjustExited });
                }
            }
        }
        self.buttons = buttons;
        events
    }

    fn capture_camera_anchor(&mut self) {
        if let [Some(l), Some(r)] = self.last_pose {
            self.camera_anchor = Some(CameraAnchor {
                midpoint: (l.position + r.position) * 0.5,
                separation: r.position - l.position,
                camera: self.camera_pose,
            });
        }
    }

    /// Scaled translation, 1:1 rotation relative to the engage-time anchor.
    pub fn map_motion(&self, pose: &ControllerPose) -> Result<TipTarget, TeleopError> {
        let side = pose.controller_id;
        let i = side.index();
        if self.modes[i] != ControllerMode::Engaged {
            return Err(TeleopError::NotEngaged(side));
        }
        let anchor = self.anchors[i].ok_or(TeleopError::NoAnchor(side))?;
        let position = anchor.tip.translation
            + (pose.position - anchor.controller_position) * self.config.translation_scale;
        let delta = (pose.orientation * anchor.controller_orientation.inverse()).renormalized();
        let rotation = delta * anchor.tip.rotation;
        Ok(TipTarget {
            instrument_id: side,
            pose: RigidTransform::new(rotation, position),
            jaw_command: self.targets[i].jaw_command,
        })
    }

    /// "Grab the world": the scene follows the controller pair, so the
    /// camera moves by the inverse of the hands' motion about the entry
    /// midpoint. Roll about the controller axis is not observable.
    pub fn camera_adjust(&self, left: &ControllerPose, right: &ControllerPose) -> Result<RigidTransform, TeleopError> {
        if self.global != GlobalMode::CameraAdjust {
            return Err(TeleopError::NotInCameraAdjust);
        }
        let Some(anchor) = self.camera_anchor else {
            return Ok(self.camera_pose);
        };
        Ok(camera_from_hands(&anchor, left.position, right.position, &self.config))
    }

    /// Full tick: record poses, apply buttons, then update targets or camera.
    pub fn step(&mut self, input: &TeleopInput) -> TeleopOutput {
        for side in Side::BOTH {
            let i = side.index();
            if let Some(p) = input.poses[i] {
                self.last_pose[i] = Some(p);
            }
        }
        let events = self.update_mode(input.buttons);

        match self.global {
            GlobalMode::CameraAdjust => {
                if self.camera_anchor.is_none() {
                    self.capture_camera_anchor();
                }
                if let [Some(l), Some(r)] = input.poses {
                    if let Ok(cam) = self.camera_adjust(&l, &r) {
                        self.camera_pose = cam;
                    }
                }
            }
            GlobalMode::Normal => {
                for side in Side::BOTH {
                    let i = side.index();
                    if self.modes[i] != ControllerMode::Engaged {
                        continue;
                    }
                    let Some(pose) = input.poses[i] else { continue };
                    if self.anchors[i].is_none() {
                        self.anchor_now(side);
                    }
                    if let Ok(t) = self.map_motion(&pose) {
                        self.targets[i].pose = t.pose;
                    }
                    if let Some(j) = input.jaw[i] {
                        self.targets[i].jaw_command = clamp_jaw(j);
                    }
                }
            }
        }

        TeleopOutput { targets: self.targets, camera_pose: self.camera_pose, events }
    }
}

/// Camera pose after the hands moved from the anchor to `(left, right)`.
pub fn camera_from_hands(anchor: &CameraAnchor, left: Vec3, right: Vec3, config: &TeleopConfig) -> RigidTransform {
    let m = (left + right) * 0.5;
    let v = right - left;
    let delta = (m - anchor.midpoint) * config.camera_translation_scale;
    let rotation = if v.norm() < config.min_camera_separation_m || anchor.separation.norm() < config.min_camera_separation_m {
        UnitQuat::IDENTITY
    } else {
        UnitQuat::shortest_arc(anchor.separation, v).unwrap_or(UnitQuat::IDENTITY)
    };
    // x ↦ R(x − m₀) + m₀ + Δ
    let hands = RigidTransform::new(rotation, anchor.midpoint + delta - rotation.rotate(anchor.midpoint));
    hands.inverse().compose(&anchor.camera)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pose(side: Side, p: Vec3, q: UnitQuat) -> ControllerPose {
        ControllerPose { controller_id: side, position: p, orientation: q, grip_point_offset: Vec3::ZERO, t_us: 0 }
    }

    fn track(p: Vec3, status: TrackStatus) -> MarkerTrack {
        MarkerTrack { controller_id: Side::Left, position_raw: p, position_smoothed: p, status, last_update_us: 0 }
    }

    fn state() -> TeleopState {
        let tips = [
            RigidTransform::from_translation(Vec3::new(-0.06, 0.011, 0.0)),
            RigidTransform::from_translation(Vec3::new(0.06, 0.011, 0.0)),
        ];
        TeleopState::new(TeleopConfig::default(), tips, RigidTransform::from_translation(Vec3::new(0.0, 0.3, 0.3)))
    }

    fn random_quat(rng: &mut impl Rng) -> UnitQuat {
        UnitQuat::from_wxyz(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)).unwrap()
    }

    fn random_vec(rng: &mut impl Rng, s: f64) -> Vec3 {
        Vec3::new(rng.random_range(-s..s), rng.random_range(-s..s), rng.random_range(-s..s))
    }

    #[test]
    fn fuse_pose_passes_position_through() {
        let p = Vec3::new(0.1, 0.2, 0.3);
        let q = UnitQuat::from_axis_angle(Vec3::Y, 0.3).unwrap();
        let out = fuse_pose(&track(p, TrackStatus::Tracked), q, &RigidTransform::IDENTITY, Vec3::ZERO, 5).unwrap();
        assert_eq!(out.position, p);
        assert_eq!(out.orientation, q);
    }

    #[test]
    fn fuse_pose_applies_lever_arm() {
        let out = fuse_pose(&track(Vec3::ZERO, TrackStatus::Coasting), UnitQuat::IDENTITY, &RigidTransform::IDENTITY, Vec3::new(0.0, 0.0, 0.05), 0).unwrap();
        assert_eq!(out.position, Vec3::new(0.0, 0.0, 0.05));
    }

    #[test]
    fn fuse_pose_matches_direct_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let calib = RigidTransform::new(random_quat(&mut rng), random_vec(&mut rng, 1.0));
            let q = random_quat(&mut rng);
            let p = random_vec(&mut rng, 0.5);
            let r = random_vec(&mut rng, 0.1);
            let out = fuse_pose(&track(p, TrackStatus::Tracked), q, &calib, r, 0).unwrap();
            // p_world = R_c p + t_c + R_q r, with rotation matrices built independently
            let rm = |q: UnitQuat, v: Vec3| {
                let m = q.to_matrix();
                Vec3::new(
                    m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
                    m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
                    m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
                )
            };
            let expected = rm(calib.rotation, p) + calib.translation + rm(q, r);
            assert!(out.position.distance(expected) < 1e-12);
        }
    }

    #[test]
    fn lost_track_is_stale() {
        let err = fuse_pose(&track(Vec3::ZERO, TrackStatus::Lost), UnitQuat::IDENTITY, &RigidTransform::IDENTITY, Vec3::ZERO, 0);
        assert_eq!(err, Err(TeleopError::StalePose(Side::Left)));
    }

    #[test]
    fn button_rule_table() {
        let mut s = state();
        assert!(s.update_mode([false, false]).is_empty());
        assert_eq!((s.mode(Side::Left), s.mode(Side::Right), s.global_mode()), (ControllerMode::Engaged, ControllerMode::Engaged, GlobalMode::Normal));

        s.update_mode([true, false]);
        assert_eq!((s.mode(Side::Left), s.mode(Side::Right), s.global_mode()), (ControllerMode::Clutched, ControllerMode::Engaged, GlobalMode::Normal));

        let ev = s.update_mode([true, true]);
        assert_eq!((s.mode(Side::Left), s.mode(Side::Right), s.global_mode()), (ControllerMode::Clutched, ControllerMode::Clutched, GlobalMode::CameraAdjust));
        assert!(ev.contains(&ModeEvent { side: None, change: ModeChange::CameraAdjustEntered }));

        s.update_mode([false, false]);
        assert_eq!(s.global_mode(), GlobalMode::Normal);
    }

    fn drive(s: &mut TeleopState, left: Vec3, q: UnitQuat, buttons: [bool; 2]) -> TeleopOutput {
        s.step(&TeleopInput {
            poses: [Some(pose(Side::Left, left, q)), Some(pose(Side::Right, Vec3::new(0.2, 0.0, 0.0), UnitQuat::IDENTITY))],
            buttons,
            jaw: [None, None],
        })
    }

    #[test]
    fn translation_is_scaled() {
        let mut s = state();
        let start = s.target(Side::Left).pose.translation;
        drive(&mut s, Vec3::ZERO, UnitQuat::IDENTITY, [false, false]);
        let out = drive(&mut s, Vec3::new(0.10, 0.0, 0.0), UnitQuat::IDENTITY, [false, false]);
        let d = out.targets[0].pose.translation - start;
        assert_abs_diff_eq!(d.x, 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(d.y, 0.0);
    }

    #[test]
    fn rotation_is_one_to_one() {
        let mut s = state();
        let start = s.target(Side::Left).pose.rotation;
        drive(&mut s, Vec3::ZERO, UnitQuat::IDENTITY, [false, false]);
        let r30 = UnitQuat::from_axis_angle(Vec3::Z, 30f64.to_radians()).unwrap();
        let out = drive(&mut s, Vec3::ZERO, r30, [false, false]);
        assert!(out.targets[0].pose.rotation.angle_to(r30 * start) < 1e-12);
    }

    #[test]
    fn clutch_freezes_and_release_does_not_jump() {
        let mut s = state();
        drive(&mut s, Vec3::ZERO, UnitQuat::IDENTITY, [false, false]);
        let before = drive(&mut s, Vec3::new(0.02, 0.01, 0.0), UnitQuat::IDENTITY, [false, false]).targets;

        let tilt = UnitQuat::from_axis_angle(Vec3::X, 0.4).unwrap();
        for k in 0..20 {
            let out = drive(&mut s, Vec3::new(0.02 + 0.01 * k as f64, -0.03, 0.05), tilt, [true, false]);
            assert_eq!(out.targets[0], before[0]);
        }
        // release at a new pose: target equals the frozen one exactly
        let out = drive(&mut s, Vec3::new(0.3, -0.03, 0.05), tilt, [false, false]);
        assert_eq!(out.targets[0], before[0]);
        // motion after release is relative to the new anchor
        let out = drive(&mut s, Vec3::new(0.32, -0.03, 0.05), tilt, [false, false]);
        assert_abs_diff_eq!(out.targets[0].pose.translation.x - before[0].pose.translation.x, 0.01, epsilon = 1e-12);
    }

    #[test]
    fn map_motion_is_translation_equivariant_and_scales() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let mut s = state();
            let a = random_vec(&mut rng, 0.3);
            let q0 = random_quat(&mut rng);
            let offset = random_vec(&mut rng, 1.0);
            let moved = a + random_vec(&mut rng, 0.1);

            s.last_pose[0] = Some(pose(Side::Left, a, q0));
            s.anchor_now(Side::Left);
            let t1 = s.map_motion(&pose(Side::Left, moved, q0)).unwrap();
            s.last_pose[0] = Some(pose(Side::Left, a + offset, q0));
            s.anchor_now(Side::Left);
            let t2 = s.map_motion(&pose(Side::Left, moved + offset, q0)).unwrap();
            assert!(t1.pose.translation.distance(t2.pose.translation) < 1e-12);

            let base = s.anchor(Side::Left).unwrap().tip.translation;
            let d1 = t2.pose.translation - base;
            s.config.translation_scale *= 2.0;
            let d2 = s.map_motion(&pose(Side::Left, moved + offset, q0)).unwrap().pose.translation - base;
            assert!((d2 - d1 * 2.0).norm() < 1e-12);
        }
    }

    #[test]
    fn rigid_hand_translation_moves_camera_opposite() {
        let mut s = state();
        let cam0 = s.camera_pose();
        let l0 = Vec3::new(-0.1, 0.0, 0.0);
        let r0 = Vec3::new(0.1, 0.0, 0.0);
        let input = |l: Vec3, r: Vec3| TeleopInput {
            poses: [Some(pose(Side::Left, l, UnitQuat::IDENTITY)), Some(pose(Side::Right, r, UnitQuat::IDENTITY))],
            buttons: [true, true],
            jaw: [None, None],
        };
        s.step(&input(l0, r0));
        let shift = Vec3::new(0.10, 0.0, 0.0);
        let out = s.step(&input(l0 + shift, r0 + shift));
        let d = out.camera_pose.translation - cam0.translation;
        assert_abs_diff_eq!(d.x, -0.10, epsilon = 1e-15);
        assert_abs_diff_eq!(out.camera_pose.rotation.angle_to(cam0.rotation), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn orbiting_hands_yaw_camera_back() {
        let mut s = state();
        let cam0 = s.camera_pose();
        let m0 = Vec3::new(0.0, 0.1, 0.0);
        let half = Vec3::new(0.1, 0.0, 0.0);
        let rot = UnitQuat::from_axis_angle(Vec3::Y, 45f64.to_radians()).unwrap();
        let input = |h: Vec3| TeleopInput {
            poses: [Some(pose(Side::Left, m0 - h, UnitQuat::IDENTITY)), Some(pose(Side::Right, m0 + h, UnitQuat::IDENTITY))],
            buttons: [true, true],
            jaw: [None, None],
        };
        s.step(&input(half));
        let out = s.step(&input(rot.rotate(half)));
        let expected_rot = rot.inverse() * cam0.rotation;
        assert!(out.camera_pose.rotation.angle_to(expected_rot) < 1e-12);
        let expected_t = m0 + rot.inverse().rotate(cam0.translation - m0);
        assert!(out.camera_pose.translation.distance(expected_t) < 1e-12);
    }

    #[test]
    fn camera_view_of_entry_hands_reproduces_current_hands() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let config = TeleopConfig::default();
        for _ in 0..200 {
            let l0 = random_vec(&mut rng, 0.3);
            let r0 = l0 + random_vec(&mut rng, 0.2) + Vec3::new(0.05, 0.0, 0.0);
            let camera = RigidTransform::new(random_quat(&mut rng), random_vec(&mut rng, 1.0));
            let anchor = CameraAnchor { midpoint: (l0 + r0) * 0.5, separation: r0 - l0, camera };
            let motion = RigidTransform::new(random_quat(&mut rng), random_vec(&mut rng, 0.2));
            let (l1, r1) = (motion.transform_point(l0), motion.transform_point(r0));
            let new_cam = camera_from_hands(&anchor, l1, r1, &config);
            for (before, now) in [(l0, l1), (r0, r1)] {
                let seen_new = new_cam.inverse().transform_point(before);
                let seen_entry = camera.inverse().transform_point(now);
                assert!(seen_new.distance(seen_entry) < 1e-9);
            }
        }
    }

    #[test]
    fn close_hands_freeze_camera_rotation() {
        let anchor = CameraAnchor { midpoint: Vec3::ZERO, separation: Vec3::new(0.005, 0.0, 0.0), camera: RigidTransform::IDENTITY };
        let cam = camera_from_hands(&anchor, Vec3::new(0.0, 0.0, -0.1), Vec3::new(0.0, 0.0, 0.1), &TeleopConfig::default());
        assert_eq!(cam.rotation, UnitQuat::IDENTITY);
    }

    #[test]
    fn jaw_command_is_clamped() {
        let t = TipTarget::new(Side::Left, RigidTransform::IDENTITY, 1.7);
        assert_eq!(t.jaw_command, 1.0);
        assert_eq!(TipTarget::new(Side::Left, RigidTransform::IDENTITY, f64::NAN).jaw_command, 0.0);
    }
}
