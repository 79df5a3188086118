//! Messages on the `/session` socket, one JSON object per text frame,
//! each tagged by `type`. The machine-readable schema lives in
//! `schema/session-messages.schema.json` at the repository root.

use dextrain_core::task::{
    ControllerInput, Event, InputPose, Phase, Protocol, RingPhase, SceneConfig, TrialCommand, TrialReport,
};
use dextrain_core::teleop::{ControllerMode, GlobalMode};
use dextrain_core::{Micros, RigidTransform, Side, UnitQuat, Vec3};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Allowed deviation of an input quaternion's norm from 1.
pub const QUAT_NORM_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Inbound {
    Hello { role: String },
    Input(InputMsg),
    Trial { cmd: TrialCommand },
    /// Raw mode: one 41-byte controller packet, hex encoded.
    Packet { data: String },
    /// Raw mode: blob centroids of one stereo frame.
    Blobs { t_us: Micros, left: Vec<[f64; 2]>, right: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPose {
    pub p: [f64; 3],
    /// `[w, x, y, z]`, unit to within [`QUAT_NORM_TOLERANCE`].
    pub q: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputMsg {
    pub t_us: Micros,
    pub controller: Side,
    pub pose: Option<RawPose>,
    #[serde(default)]
    pub button: bool,
    #[serde(default)]
    pub jaw: f64,
}

impl InputMsg {
    /// Checks ranges and renormalizes the quaternion.
    pub fn validate(&self) -> Result<ControllerInput, String> {
        if !self.jaw.is_finite() || !(0.0..=1.0).contains(&self.jaw) {
            return Err(format!("jaw {} outside [0, 1]", self.jaw));
        }
        let pose = match self.pose {
            None => None,
            Some(RawPose { p, q }) => {
                if p.iter().chain(&q).any(|v| !v.is_finite()) {
                    return Err("pose has non-finite components".into());
                }
                let norm = q.iter().map(|c| c * c).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > QUAT_NORM_TOLERANCE {
                    return Err(format!("quaternion norm {norm:.6} is not within {QUAT_NORM_TOLERANCE} of 1"));
                }
                let q = UnitQuat::from_wxyz(q[0], q[1], q[2], q[3]).map_err(|e| e.to_string())?;
                Some(InputPose { p: Vec3::from(p), q })
            }
        };
        Ok(ControllerInput { t_us: self.t_us, controller: self.controller, pose, button: self.button, jaw: self.jaw })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseMsg {
    pub p: Vec3,
    pub q: UnitQuat,
}

impl From<RigidTransform> for PoseMsg {
    fn from(t: RigidTransform) -> Self {
        Self { p: t.translation, q: t.rotation }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentMsg {
    pub side: Side,
    pub joints: [f64; 6],
    /// Jaw opening angle.
    pub jaw: f64,
    pub jaw_closed: bool,
    pub tip: PoseMsg,
    pub mode: ControllerMode,
    pub ik_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingMsg {
    pub id: u8,
    pub pose: PoseMsg,
    pub state: RingPhase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMsg {
    /// Time since the current phase began.
    pub t_us: Micros,
    pub session_t_us: Micros,
    pub phase: Phase,
    pub instruments: Vec<InstrumentMsg>,
    pub rings: Vec<RingMsg>,
    pub camera: PoseMsg,
    pub mode: GlobalMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Outbound {
    Ack { scene: Box<SceneConfig>, protocol: Protocol, snapshot_hz: u32, input_mode: InputMode },
    State(StateMsg),
    Event { t_us: Micros, kind: String, data: Map<String, Value> },
    Metrics(TrialReport),
    Haptic { controller: Side, amplitude: f64, duration_ms: u32 },
    Error { message: String },
}

impl Outbound {
    pub fn event(e: &Event) -> Outbound {
        let Value::Object(mut data) = serde_json::to_value(e).expect("event serializes") else {
            unreachable!("events serialize to objects")
        };
        data.remove("t_us");
        let kind = match data.remove("kind") {
            Some(Value::String(k)) => k,
            _ => unreachable!("events carry a kind tag"),
        };
        Outbound::Event { t_us: e.t_us, kind, data }
    }

    pub fn error(message: impl Into<String>) -> Outbound {
        Outbound::Error { message: message.into() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("outbound messages serialize")
    }
}

/// Where controller input comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    /// Clients send fused controller poses.
    #[default]
    Pose,
    /// Clients send packets and blob records for the tracking pipeline.
    Raw,
}

pub fn parse_inbound(text: &str) -> Result<Inbound, String> {
    serde_json::from_str(text).map_err(|e| e.to_string())
}
