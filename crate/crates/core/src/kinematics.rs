//! Forward/inverse kinematics of a laparoscopic-style instrument that pivots
//! about a fixed remote center of motion (the trocar).
//!
//! Joint chain, starting at the RCM frame (whose +Z points down into the
//! workspace at the home orientation):
//!
//! ```text
//! R_y(q1) · R_x(q2) · T_z(q3) · R_z(q4) · R_x(q5) · R_y(q6) · T_z(L_tip)
//! yaw       pitch     insert    roll      wrist pitch wrist yaw  jaw pivot → tip
//! ```
//!
//! The IK is damped least squares on the geometric Jacobian.

use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::teleop::TipTarget;
use crate::{RigidTransform, UnitQuat, Vec3};

pub const JOINTS: usize = 6;
/// Index of the prismatic insertion joint.
pub const INSERTION: usize = 2;
/// Index of the shaft roll joint.
pub const ROLL: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("joint {joint} = {value} outside [{lo}, {hi}]")]
    OutOfLimits { joint: usize, value: f64, lo: f64, hi: f64 },
    #[error("target is {distance:.4} m from the RCM, beyond the {radius:.4} m workspace")]
    Unreachable { distance: f64, radius: f64 },
    #[error("target pose is not finite")]
    NonFiniteTarget,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointLimit {
    pub lo: f64,
    pub hi: f64,
}

impl JointLimit {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }

    /// A revolute range covering a whole turn, e.g. an unlimited roll.
    pub fn is_full_turn(&self) -> bool {
        self.hi - self.lo >= std::f64::consts::TAU - 1e-12
    }

    /// Wraps an angle into the range; only meaningful for full-turn joints.
    pub fn wrap(&self, v: f64) -> f64 {
        let w = self.lo + (v - self.lo).rem_euclid(std::f64::consts::TAU);
        w.min(self.hi)
    }
}

/// Geometry and limits of one instrument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentModel {
    /// World pose of the remote-center frame.
    pub rcm_pose: RigidTransform,
    pub limits: [JointLimit; JOINTS],
    /// Wrist pivot to tip distance.
    pub tip_length: f64,
    /// Jaw opening at `jaw_command = 0`; fully closed is 0 rad.
    pub jaw_max: f64,
}

impl InstrumentModel {
    /// RCM frame whose +Z points along world −Y (straight down).
    pub fn downward_rcm(position: Vec3) -> RigidTransform {
        let rot = UnitQuat::from_axis_angle(Vec3::X, std::f64::consts::FRAC_PI_2).expect("unit axis");
        RigidTransform::new(rot, position)
    }

    pub fn with_rcm(position: Vec3) -> Self {
        use std::f64::consts::PI;
        let deg = |d: f64| d.to_radians();
        Self {
            rcm_pose: Self::downward_rcm(position),
            limits: [
                JointLimit::new(-deg(60.0), deg(60.0)),
                JointLimit::new(-deg(60.0), deg(60.0)),
                JointLimit::new(0.0, 0.25),
                JointLimit::new(-PI, PI),
                JointLimit::new(-deg(90.0), deg(90.0)),
                JointLimit::new(-deg(90.0), deg(90.0)),
            ],
            tip_length: 0.009,
            jaw_max: deg(60.0),
        }
    }

    /// Farthest tip distance from the RCM.
    pub fn workspace_radius(&self) -> f64 {
        self.limits[INSERTION].hi + self.tip_length
    }

    pub fn home(&self) -> JointVector {
        JointVector::clamped(self, [0.0, 0.0, 0.10, 0.0, 0.0, 0.0], 0.0)
    }

    pub fn validate(&self) -> Result<(), String> {
        for (i, l) in self.limits.iter().enumerate() {
            if !(l.lo < l.hi) {
                return Err(format!("joint {i}: lower limit {} not below upper {}", l.lo, l.hi));
            }
        }
        if !(self.tip_length > 0.0) {
            return Err("tip length must be positive".into());
        }
        if !(self.jaw_max > 0.0) {
            return Err("jaw range must be positive".into());
        }
        Ok(())
    }
}

/// Joint values `q1..q6` (rad, rad, m, rad, rad, rad) plus jaw angle (rad).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointVector {
    pub q: [f64; JOINTS],
    pub jaw: f64,
}

impl JointVector {
    pub fn clamped(model: &InstrumentModel, q: [f64; JOINTS], jaw: f64) -> Self {
        let mut out = [0.0; JOINTS];
        for i in 0..JOINTS {
            out[i] = model.limits[i].clamp(q[i]);
        }
        Self { q: out, jaw: jaw.clamp(0.0, model.jaw_max) }
    }

    pub fn within_limits(&self, model: &InstrumentModel) -> bool {
        self.q.iter().zip(&model.limits).all(|(v, l)| l.contains(*v))
    }
}

/// Intermediate frames of the chain, all in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainFrames {
    pub axes: [Vec3; JOINTS],
    pub origins: [Vec3; JOINTS],
    pub rcm: Vec3,
    pub wrist: Vec3,
    /// Unit shaft direction (from RCM toward the wrist).
    pub shaft: Vec3,
    pub tip: RigidTransform,
}

fn rot(axis: Vec3, angle: f64) -> RigidTransform {
    RigidTransform::from_rotation(UnitQuat::from_axis_angle(axis, angle).expect("unit axis"))
}

fn slide(d: f64) -> RigidTransform {
    RigidTransform::from_translation(Vec3::new(0.0, 0.0, d))
}

fn check_limits(model: &InstrumentModel, q: &JointVector) -> Result<(), KinematicsError> {
    for (i, (v, l)) in q.q.iter().zip(&model.limits).enumerate() {
        if !l.contains(*v) {
            return Err(KinematicsError::OutOfLimits { joint: i, value: *v, lo: l.lo, hi: l.hi });
        }
    }
    Ok(())
}

pub fn chain_frames(model: &InstrumentModel, q: &JointVector) -> Result<ChainFrames, KinematicsError> {
    check_limits(model, q)?;
    Ok(frames_unchecked(model, &q.q))
}

fn frames_unchecked(model: &InstrumentModel, q: &[f64; JOINTS]) -> ChainFrames {
    let t0 = model.rcm_pose;
    let t1 = t0 * rot(Vec3::Y, q[0]);
    let t2 = t1 * rot(Vec3::X, q[1]);
    let t3 = t2 * slide(q[2]);
    let t4 = t3 * rot(Vec3::Z, q[3]);
    let t5 = t4 * rot(Vec3::X, q[4]);
    let t6 = t5 * rot(Vec3::Y, q[5]);
    let tip = t6 * slide(model.tip_length);

    let rcm = t0.translation;
    let wrist = t3.translation;
    let shaft = t2.transform_vector(Vec3::Z);
    ChainFrames {
        axes: [
            t0.transform_vector(Vec3::Y),
            t1.transform_vector(Vec3::X),
            shaft,
            t3.transform_vector(Vec3::Z),
            t4.transform_vector(Vec3::X),
            t5.transform_vector(Vec3::Y),
        ],
        origins: [rcm, rcm, rcm, wrist, wrist, wrist],
        rcm,
        wrist,
        shaft,
        tip,
    }
}

/// World pose of the tip frame.
pub fn forward_kinematics(model: &InstrumentModel, q: &JointVector) -> Result<RigidTransform, KinematicsError> {
    Ok(chain_frames(model, q)?.tip)
}

/// Geometric Jacobian: rows 0..3 map joint rates to tip linear velocity,
/// rows 3..6 to angular velocity (world frame).
pub fn jacobian(model: &InstrumentModel, q: &JointVector) -> Result<Matrix6<f64>, KinematicsError> {
    check_limits(model, q)?;
    Ok(jacobian_unchecked(model, &q.q))
}

fn jacobian_unchecked(model: &InstrumentModel, q: &[f64; JOINTS]) -> Matrix6<f64> {
    let f = frames_unchecked(model, q);
    let p = f.tip.translation;
    let mut j = Matrix6::zeros();
    for i in 0..JOINTS {
        let z = f.axes[i];
        let (lin, ang) = if i == INSERTION {
            (z, Vec3::ZERO)
        } else {
            (z.cross(p - f.origins[i]), z)
        };
        for r in 0..3 {
            j[(r, i)] = lin[r];
            j[(r + 3, i)] = ang[r];
        }
    }
    j
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IkConfig {
    /// Damping λ in Δq = Jᵀ(JJᵀ + λ²I)⁻¹e.
    pub damping: f64,
    pub max_step_rad: f64,
    pub max_step_m: f64,
    pub position_tolerance: f64,
    pub rotation_tolerance: f64,
    pub max_iterations: usize,
    /// Scale applied to the position rows of the Jacobian and error so that
    /// metres and radians are balanced under the damping (1/m).
    pub position_weight: f64,
    /// Retry from roll-offset seeds when the warm start does not converge.
    pub roll_restarts: bool,
}

impl Default for IkConfig {
    fn default() -> Self {
        Self {
            damping: 0.05,
            max_step_rad: 0.2,
            max_step_m: 0.02,
            position_tolerance: 1e-4,
            rotation_tolerance: 1e-3,
            max_iterations: 50,
            position_weight: 50.0,
            roll_restarts: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkSolution {
    /// Converged joints, or the best iterate if the cap was hit.
    pub joints: JointVector,
    pub converged: bool,
    /// Norm of the final 6-D error twist.
    pub residual: f64,
    pub position_error: f64,
    pub rotation_error: f64,
    pub iterations: usize,
}

/// Error twist `[p_target − p; log(R_target·Rᵀ)]`.
fn error_twist(current: &RigidTransform, target: &RigidTransform) -> (Vector6<f64>, f64, f64) {
    let dp = target.translation - current.translation;
    let dr = (target.rotation * current.rotation.inverse()).to_rotation_vector();
    let e = Vector6::new(dp.x, dp.y, dp.z, dr.x, dr.y, dr.z);
    (e, dp.norm(), dr.norm())
}

/// One DLS step on the weighted system. Joints resting on a limit whose
/// step would push them further out are frozen and the step is re-solved
/// without them.
fn dls_step(model: &InstrumentModel, q: &[f64; JOINTS], e: &Vector6<f64>, config: &IkConfig) -> Vector6<f64> {
    let mut full = jacobian_unchecked(model, q);
    let mut e = *e;
    for r in 0..3 {
        e[r] *= config.position_weight;
        for c in 0..JOINTS {
            full[(r, c)] *= config.position_weight;
        }
    }
    let lambda2 = config.damping * config.damping;
    let mut frozen = [false; JOINTS];
    let mut dq = Vector6::zeros();
    for _ in 0..JOINTS {
        let mut j = full;
        for (i, f) in frozen.iter().enumerate() {
            if *f {
                j.column_mut(i).fill(0.0);
            }
        }
        let damped = j * j.transpose() + Matrix6::identity() * lambda2;
        let Some(chol) = damped.cholesky() else {
            return Vector6::zeros();
        };
        dq = j.transpose() * chol.solve(&e);
        let mut changed = false;
        for i in 0..JOINTS {
            let l = &model.limits[i];
            if frozen[i] || l.is_full_turn() {
                continue;
            }
            if (q[i] <= l.lo && dq[i] < 0.0) || (q[i] >= l.hi && dq[i] > 0.0) {
                frozen[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    dq
}

fn descend(
    model: &InstrumentModel,
    goal: &RigidTransform,
    start: [f64; JOINTS],
    jaw: f64,
    config: &IkConfig,
) -> IkSolution {
    let mut q = start;
    let mut best: Option<IkSolution> = None;
    for iteration in 0..=config.max_iterations {
        let tip = frames_unchecked(model, &q).tip;
        let (e, pos_err, rot_err) = error_twist(&tip, goal);
        let candidate = IkSolution {
            joints: JointVector { q, jaw },
            converged: pos_err < config.position_tolerance && rot_err < config.rotation_tolerance,
            residual: e.norm(),
            position_error: pos_err,
            rotation_error: rot_err,
            iterations: iteration,
        };
        if candidate.converged {
            return candidate;
        }
        if best.map_or(true, |b| candidate.residual < b.residual) {
            best = Some(candidate);
        }
        if iteration == config.max_iterations {
            break;
        }

        let dq = dls_step(model, &q, &e, config);
        for i in 0..JOINTS {
            let cap = if i == INSERTION { config.max_step_m } else { config.max_step_rad };
            let l = &model.limits[i];
            let v = q[i] + dq[i].clamp(-cap, cap);
            q[i] = if l.is_full_turn() { l.wrap(v) } else { l.clamp(v) };
        }
    }
    let mut out = best.expect("at least one iterate evaluated");
    out.iterations = config.max_iterations;
    out
}

/// Damped-least-squares IK for a tip target, warm-started from `seed`.
///
/// Each iteration every joint's step is clamped to the per-iteration limit,
/// then joints are clamped to their limits (the roll wraps instead). If the warm start does not
/// converge, the descent is repeated from the seed with the roll turned by
/// multiples of 90°, keeping the first converged or overall best result.
/// The jaw is set directly from the target's jaw command.
pub fn solve_ik(
    model: &InstrumentModel,
    target: &TipTarget,
    seed: &JointVector,
    config: &IkConfig,
) -> Result<IkSolution, KinematicsError> {
    let goal = target.pose;
    if !goal.is_finite() {
        return Err(KinematicsError::NonFiniteTarget);
    }
    let distance = goal.translation.distance(model.rcm_pose.translation);
    let radius = model.workspace_radius();
    if distance > radius {
        return Err(KinematicsError::Unreachable { distance, radius });
    }

    let jaw = model.jaw_max * (1.0 - target.jaw_command.clamp(0.0, 1.0));
    let start = JointVector::clamped(model, seed.q, jaw).q;
    let mut best = descend(model, &goal, start, jaw, config);
    let roll = &model.limits[ROLL];
    for k in [2.0, 1.0, 3.0] {
        if best.converged || !config.roll_restarts || !roll.is_full_turn() {
            break;
        }
        let mut q = start;
        q[ROLL] = roll.wrap(q[ROLL] + k * std::f64::consts::FRAC_PI_2);
        let attempt = descend(model, &goal, q, jaw, config);
        if attempt.converged || attempt.residual < best.residual {
            best = attempt;
        }
    }
    Ok(best)
}
