use serde::{Deserialize, Serialize};

use super::{MathError, RigidTransform, Vec3};

/// Distortion-free pinhole camera mounted on the tracker rig.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinholeCamera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    /// Pose of the camera frame in the rig (left-camera) frame.
    pub pose_in_rig: RigidTransform,
}

const MIN_DEPTH: f64 = 1e-6;

impl PinholeCamera {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
        pose_in_rig: RigidTransform,
    ) -> Result<Self, MathError> {
        let cam = Self { fx, fy, cx, cy, width, height, pose_in_rig };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<(), MathError> {
        if !(self.fx > 0.0 && self.fy > 0.0) || !self.fx.is_finite() || !self.fy.is_finite() {
            return Err(MathError::InvalidCamera(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(MathError::InvalidCamera("image size must be positive".into()));
        }
        if !(0.0..self.width as f64).contains(&self.cx) || !(0.0..self.height as f64).contains(&self.cy) {
            return Err(MathError::InvalidCamera(format!(
                "principal point ({}, {}) outside {}x{} image",
                self.cx, self.cy, self.width, self.height
            )));
        }
        if !self.pose_in_rig.is_finite() {
            return Err(MathError::InvalidCamera("non-finite pose".into()));
        }
        Ok(())
    }

    pub fn rig_to_camera(&self, p_rig: Vec3) -> Vec3 {
        self.pose_in_rig.inverse().transform_point(p_rig)
    }

    /// Projects a rig-frame point to pixel coordinates `(u, v)`.
    pub fn project(&self, p_rig: Vec3) -> Result<(f64, f64), MathError> {
        let p = self.rig_to_camera(p_rig);
        if !(p.z > MIN_DEPTH) {
            return Err(MathError::BehindCamera(p.z));
        }
        Ok((self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }

    pub fn contains_pixel(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u < self.width as f64 && v < self.height as f64
    }

    /// Camera center (rig frame).
    pub fn center(&self) -> Vec3 {
        self.pose_in_rig.translation
    }

    /// Unit viewing ray through pixel `(u, v)`, expressed in the rig frame.
    pub fn ray_direction(&self, u: f64, v: f64) -> Vec3 {
        let d = Vec3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0);
        self.pose_in_rig
            .transform_vector(d)
            .normalized()
            .expect("pixel ray has a unit z component")
    }
}
