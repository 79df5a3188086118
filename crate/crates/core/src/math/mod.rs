//! 3-D primitives shared by the whole pipeline.
//!
//! Conventions: the world frame is right-handed with +Y up. Camera frames
//! are x-right, y-down, z-forward along the optical axis, and the left
//! camera is the tracker rig's reference frame. Quaternions are Hamilton
//! (`w` scalar first) and always returned with `w >= 0`.

mod camera;
mod quat;
mod transform;
mod vec3;

pub use camera::PinholeCamera;
pub use quat::UnitQuat;
pub use transform::RigidTransform;
pub use vec3::Vec3;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MathError {
    #[error("rotation axis is not unit length (norm {0})")]
    NonUnitAxis(f64),
    #[error("cannot normalize a zero-length quaternion")]
    ZeroQuaternion,
    #[error("point is behind the camera (z = {0} m)")]
    BehindCamera(f64),
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
}
