//! Core engine for a portable robotic-surgery dexterity trainer.
//!
//! The pipeline runs from raw sensing to task scoring:
//!
//! * [`tracking`] finds one IR LED per controller in each stereo image,
//!   triangulates it and smooths the result;
//! * [`imu`] estimates controller orientation with a complementary filter;
//! * [`teleop`] fuses both into 6-DoF poses and runs the clutch / camera
//!   state machine that produces instrument tip targets;
//! * [`kinematics`] turns tip targets into joint values for a
//!   remote-center-of-motion instrument;
//! * [`task`] simulates the bimanual peg-transfer board and computes the
//!   trial metrics.
//!
//! Everything here is deterministic and free of I/O; file formats, replay
//! and synthetic data live in `dextrain-io`.

pub mod imu;
pub mod kinematics;
pub mod math;
pub mod task;
pub mod teleop;
pub mod tracking;

pub use math::{MathError, PinholeCamera, RigidTransform, UnitQuat, Vec3};

/// Which hand-held controller (and which instrument it drives).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }

    pub fn from_index(index: usize) -> Option<Side> {
        match index {
            0 => Some(Side::Left),
            1 => Some(Side::Right),
            _ => None,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Simulation/sensor timestamp in microseconds.
pub type Micros = u64;
