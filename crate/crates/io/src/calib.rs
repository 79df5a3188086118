//! Stereo rig calibration file (TOML).

use std::path::Path;

use dextrain_core::imu::ImuConfig;
use dextrain_core::tracking::{StereoRig, TrackingConfig};
use dextrain_core::{PinholeCamera, RigidTransform, UnitQuat, Vec3};
use serde::{Deserialize, Serialize};

use crate::IoError;

/// Intrinsics of one camera. Distortion is reserved and must be zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    /// k1, k2, p1, p2, k3.
    #[serde(default)]
    pub distortion: [f64; 5],
}

impl Default for Intrinsics {
    fn default() -> Self {
        Self { fx: 500.0, fy: 500.0, cx: 320.0, cy: 240.0, width: 640, height: 480, distortion: [0.0; 5] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationFile {
    pub left: Intrinsics,
    pub right: Intrinsics,
    /// Right camera pose in the left-camera (tracker) frame.
    pub right_in_left: RigidTransform,
    pub tracker_to_world: RigidTransform,
    pub tracking: TrackingConfig,
    pub imu: ImuConfig,
}

pub const DEFAULT_BASELINE_M: f64 = 0.04;

impl Default for CalibrationFile {
    fn default() -> Self {
        // The tracker looks forward from behind the hands: camera y is down
        // and z points away from the user.
        let flip = UnitQuat::from_wxyz(0.0, 1.0, 0.0, 0.0).expect("unit");
        Self {
            left: Intrinsics::default(),
            right: Intrinsics::default(),
            right_in_left: RigidTransform::from_translation(Vec3::new(DEFAULT_BASELINE_M, 0.0, 0.0)),
            tracker_to_world: RigidTransform::new(flip, Vec3::new(0.0, 0.25, 0.35)),
            tracking: TrackingConfig::default(),
            imu: ImuConfig::default(),
        }
    }
}

impl CalibrationFile {
    pub fn validate(&self) -> Result<(), IoError> {
        for (name, cam) in [("left", &self.left), ("right", &self.right)] {
            if cam.distortion.iter().any(|&k| k != 0.0) {
                return Err(IoError::Invalid(format!("{name} camera: lens distortion is not supported")));
            }
        }
        self.rig()?;
        if !self.tracker_to_world.is_finite() {
            return Err(IoError::Invalid("tracker_to_world is not finite".into()));
        }
        Ok(())
    }

    pub fn rig(&self) -> Result<StereoRig, IoError> {
        let cam = |i: &Intrinsics, pose| PinholeCamera::new(i.fx, i.fy, i.cx, i.cy, i.width, i.height, pose);
        let left = cam(&self.left, RigidTransform::IDENTITY).map_err(|e| IoError::Invalid(format!("left camera: {e}")))?;
        let right = cam(&self.right, self.right_in_left).map_err(|e| IoError::Invalid(format!("right camera: {e}")))?;
        StereoRig::new(left, right).map_err(|e| IoError::Invalid(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("calibration serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, IoError> {
        let calib: Self = toml::from_str(text).map_err(|e| IoError::Parse(e.to_string()))?;
        calib.validate()?;
        Ok(calib)
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        Self::from_toml(&crate::read_text(path)?).map_err(|e| e.at(path))
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        crate::write_text(path, &self.to_toml())
    }
}
