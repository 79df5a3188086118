//! Controller orientation from gyro + accelerometer.
//!
//! A complementary filter: the gyro is integrated every sample and the
//! accelerometer, when it reads close to 1 g, pulls the estimated tilt a
//! fixed fraction of the way toward the measured gravity direction. Heading
//! is never corrected (there is no magnetometer) and the IMU is never used
//! for position.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{Micros, UnitQuat, Vec3};

pub const GRAVITY: f64 = 9.81;

const MAX_DT_S: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImuError {
    #[error("accelerometer reads {norm:.3} m/s², not quasi-static")]
    NotStatic { norm: f64 },
    #[error("sample at {t_us} µs does not follow {last_us} µs")]
    NonMonotonic { last_us: Micros, t_us: Micros },
    #[error("gap of {dt_s} s between samples exceeds {MAX_DT_S} s")]
    GapTooLong { dt_s: f64 },
}

/// One gyro + accelerometer reading in the controller body frame.
///
/// `accel` is specific force: a level, motionless controller reads
/// `(0, +9.81, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImuSample {
    pub t_us: Micros,
    pub gyro: Vec3,
    pub accel: Vec3,
}

impl ImuSample {
    fn accel_usable(&self) -> bool {
        let n = self.accel.norm();
        (0.5 * GRAVITY..=1.5 * GRAVITY).contains(&n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImuConfig {
    /// Fraction of the tilt error removed per accepted sample.
    pub alpha: f64,
    pub sample_rate_hz: f64,
}

impl Default for ImuConfig {
    fn default() -> Self {
        Self { alpha: 0.02, sample_rate_hz: 100.0 }
    }
}

/// Body→world orientation estimate for one controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientationFilter {
    pub q: UnitQuat,
    pub alpha: f64,
    pub last_t_us: Micros,
}

impl OrientationFilter {
    /// Levels the filter from a quasi-static accelerometer reading; heading
    /// starts at zero.
    pub fn init_from_accel(sample: &ImuSample, alpha: f64) -> Result<Self, ImuError> {
        let norm = sample.accel.norm();
        if !(norm > 0.5 * GRAVITY && norm < 1.5 * GRAVITY) {
            return Err(ImuError::NotStatic { norm });
        }
        let q = UnitQuat::shortest_arc(sample.accel, Vec3::Y).ok_or(ImuError::NotStatic { norm })?;
        Ok(Self { q, alpha, last_t_us: sample.t_us })
    }

    pub fn with_orientation(q: UnitQuat, alpha: f64, t_us: Micros) -> Self {
        Self { q, alpha, last_t_us: t_us }
    }

    /// Gyro propagation followed by the accelerometer tilt correction.
    pub fn step(&self, sample: &ImuSample) -> Result<Self, ImuError> {
        if sample.t_us <= self.last_t_us {
            return Err(ImuError::NonMonotonic { last_us: self.last_t_us, t_us: sample.t_us });
        }
        let dt = (sample.t_us - self.last_t_us) as f64 * 1e-6;
        if dt > MAX_DT_S {
            return Err(ImuError::GapTooLong { dt_s: dt });
        }
        let mut q = self.q.integrate(sample.gyro, dt);
        if self.alpha != 0.0 && sample.accel_usable() {
            q = correct_tilt(q, sample.accel, self.alpha);
        }
        Ok(Self { q, alpha: self.alpha, last_t_us: sample.t_us })
    }

    pub fn update(&mut self, sample: &ImuSample) -> Result<UnitQuat, ImuError> {
        *self = self.step(sample)?;
        Ok(self.q)
    }
}

/// Splits `q` into a rotation about world +Y (heading) applied after a
/// swing about a horizontal body axis: `q = heading ⊗ swing`.
pub fn split_heading(q: UnitQuat) -> (UnitQuat, UnitQuat) {
    let up_in_body = q.inverse().rotate(Vec3::Y);
    let swing = UnitQuat::shortest_arc(up_in_body, Vec3::Y).unwrap_or(UnitQuat::IDENTITY);
    (q * swing.inverse(), swing)
}

/// Signed heading angle about world +Y.
pub fn heading(q: UnitQuat) -> f64 {
    let (h, _) = split_heading(q);
    2.0 * h.y().atan2(h.w())
}

/// Angle between the estimated and the given body-frame "up" direction.
pub fn tilt_error(q: UnitQuat, true_up_in_body: Vec3) -> f64 {
    let est = q.inverse().rotate(Vec3::Y);
    let t = true_up_in_body.normalized().unwrap_or(Vec3::Y);
    est.cross(t).norm().atan2(est.dot(t))
}

/// Moves the swing part of `q` a fraction `alpha` toward the swing implied
/// by the measured specific force; heading is left untouched.
fn correct_tilt(q: UnitQuat, accel: Vec3, alpha: f64) -> UnitQuat {
    let (heading, swing) = split_heading(q);
    let Some(measured) = UnitQuat::shortest_arc(accel, Vec3::Y) else {
        return q;
    };
    (heading * swing.slerp(measured, alpha)).renormalized()
}
