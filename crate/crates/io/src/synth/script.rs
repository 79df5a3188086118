//! Hand-written task scripts.
//!
//! A script moves the two instrument tips through straight-line segments
//! and opens or closes the jaws, one step after another at the simulation
//! tick rate. Tick 1 holds both tips at home so the controllers anchor
//! there; step ticks follow from tick 2. After the last step the tips hold
//! until the end of the trial.
//!
//! ```toml
//! [[step]]
//! tool = "left"
//! to = [-0.04, 0.036, -0.018]
//! ticks = 40
//!
//! [[step]]
//! tool = "left"
//! jaw = 1.0
//!
//! [[step]]
//! wait = 100
//! ```

use std::path::Path;

use dextrain_core::task::{ControllerInput, SceneConfig, Sim};
use dextrain_core::{Side, Vec3};
use serde::{Deserialize, Serialize};

use super::controller_input;
use crate::IoError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Step {
    Move(MoveStep),
    Jaw(JawStep),
    Wait(WaitStep),
}

/// Straight line from the current tip position, reached on the last tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoveStep {
    pub tool: Side,
    pub to: Vec3,
    pub ticks: u32,
}

/// Sets a jaw command; takes one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JawStep {
    pub tool: Side,
    pub jaw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaitStep {
    pub wait: u32,
}

/// Metrics the script's author worked out by hand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    pub transfers: u32,
    pub drops: u32,
    pub mean_transfer_time_s: f64,
    pub path_length_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Script {
    #[serde(default)]
    pub description: String,
    /// Controller positions at tick 1.
    pub controller_origin: [Vec3; 2],
    pub expected: Option<Expected>,
    #[serde(rename = "step")]
    pub steps: Vec<Step>,
}

impl Script {
    pub fn from_toml(text: &str) -> Result<Self, IoError> {
        toml::from_str(text).map_err(|e| IoError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        Self::from_toml(&crate::read_text(path)?).map_err(|e| e.at(path))
    }

    /// Ticks covered by the steps, including the anchoring tick.
    pub fn ticks(&self) -> u64 {
        1 + self
            .steps
            .iter()
            .map(|s| match s {
                Step::Move(m) => m.ticks as u64,
                Step::Jaw(_) => 1,
                Step::Wait(w) => w.wait as u64,
            })
            .sum::<u64>()
    }

    /// Tip targets and jaw commands for ticks `1..=ticks()`.
    pub fn timeline(&self, tip_home: [Vec3; 2]) -> Result<Vec<([Vec3; 2], [f64; 2])>, IoError> {
        let mut tips = tip_home;
        let mut jaws = [0.0; 2];
        let mut out = vec![(tips, jaws)];
        for (i, step) in self.steps.iter().enumerate() {
            match step {
                Step::Move(m) => {
                    if m.ticks == 0 {
                        return Err(IoError::Invalid(format!("step {}: a move needs at least one tick", i + 1)));
                    }
                    let from = tips[m.tool.index()];
                    for k in 1..=m.ticks {
                        tips[m.tool.index()] =
                            if k == m.ticks { m.to } else { from + (m.to - from) * (k as f64 / m.ticks as f64) };
                        out.push((tips, jaws));
                    }
                }
                Step::Jaw(j) => {
                    jaws[j.tool.index()] = j.jaw;
                    out.push((tips, jaws));
                }
                Step::Wait(w) => out.extend(std::iter::repeat_n((tips, jaws), w.wait as usize)),
            }
        }
        Ok(out)
    }

    /// Controller inputs for a single trial of `scene`, one per controller
    /// per tick, holding the final pose until the trial ends.
    pub fn inputs(&self, scene: &SceneConfig) -> Result<Vec<ControllerInput>, IoError> {
        let home = Sim::new(scene).tips().map(|t| t.translation);
        let mut timeline = self.timeline(home)?;
        let trial_ticks = scene.seconds_to_ticks(scene.protocol.trial_s) as usize;
        if timeline.len() > trial_ticks {
            return Err(IoError::Invalid(format!(
                "script runs {} ticks, longer than the {trial_ticks}-tick trial",
                timeline.len()
            )));
        }
        let last = *timeline.last().expect("tick 1 is always present");
        timeline.resize(trial_ticks, last);
        let dt = scene.dt_us();
        let scale = scene.teleop.translation_scale;
        let mut out = Vec::with_capacity(2 * timeline.len());
        for (k, (tips, jaws)) in timeline.iter().enumerate() {
            let t_us = (k as u64 + 1) * dt;
            for side in Side::BOTH {
                let i = side.index();
                out.push(controller_input(t_us, side, self.controller_origin[i], tips[i], home[i], scale, jaws[i]));
            }
        }
        Ok(out)
    }
}
