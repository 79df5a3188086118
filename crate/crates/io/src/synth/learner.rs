//! A simulated trainee that plays whole sessions.
//!
//! The learner watches the board and transfers rings with a mid-air
//! handover: the instrument on the ring's side lifts it to the middle of
//! the board, the other instrument takes it and sets it on a free peg
//! across. Once a side is empty the direction reverses. Every aim point is
//! perturbed by Gaussian motion noise, every move runs at the current
//! speed and each step is preceded by an exponentially distributed pause.
//! Noise and pauses shrink from one trial to the next.
//!
//! The learner only produces controller inputs, so a recorded run replays
//! through the engine to the same report.

use std::collections::VecDeque;

use dextrain_core::task::{ControllerInput, PegId, Phase, RingPhase, SceneConfig, Session, SessionReport, Sim, TrialCommand};
use dextrain_core::{Side, Vec3};
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use super::{controller_input, rng, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkillLevel {
    /// Tip speed along each straight move.
    pub speed_mps: f64,
    /// Mean pause before each step.
    pub hesitation_s: f64,
    /// Per-axis standard deviation of every aim point.
    pub aim_sigma_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    /// Skill during familiarization and trial 1, trial 2, ...; the last
    /// level repeats.
    pub levels: Vec<SkillLevel>,
    pub controller_origin: [Vec3; 2],
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            levels: vec![
                SkillLevel { speed_mps: 0.04, hesitation_s: 0.8, aim_sigma_m: 0.004 },
                SkillLevel { speed_mps: 0.06, hesitation_s: 0.4, aim_sigma_m: 0.0015 },
                SkillLevel { speed_mps: 0.08, hesitation_s: 0.15, aim_sigma_m: 0.0005 },
            ],
            controller_origin: [Vec3::new(-0.1, 0.2, 0.1), Vec3::new(0.1, 0.2, 0.1)],
        }
    }
}

impl LearnerConfig {
    fn level(&self, phase: Phase) -> SkillLevel {
        let i = match phase {
            Phase::Trial { n } => n.saturating_sub(1) as usize,
            _ => 0,
        };
        self.levels[i.min(self.levels.len() - 1)]
    }
}

#[derive(Debug, Clone)]
pub struct LearnerRun {
    pub inputs: Vec<ControllerInput>,
    pub report: SessionReport,
}

/// Plays the scene's full protocol from `Start` to `Done`.
pub fn run_learner(scene: &SceneConfig, config: &LearnerConfig, seed: u64) -> LearnerRun {
    let mut session = Session::new(scene.clone());
    session.command(TrialCommand::Start).expect("fresh session starts");
    let mut learner = Learner::new(scene, config.clone(), seed);
    let dt = scene.dt_us();
    let mut inputs = Vec::new();
    while session.phase() != Phase::Done {
        let t_us = session.now_us() + dt;
        for input in learner.act(&session, t_us) {
            session.apply_input(input).expect("learner inputs are time-ordered");
            inputs.push(input);
        }
        session.tick();
    }
    LearnerRun { inputs, report: session.report() }
}

/// Ring center height at the handover point.
const HANDOVER_Y: f64 = 0.05;
/// Grip point above the ring's center circle.
const GRIP_RISE: f64 = 0.004;
/// Ring center height when released over a peg.
const PLACE_Y: f64 = 0.02;
const APPROACH_RISE: f64 = 0.03;

#[derive(Debug, Clone, Copy)]
enum Action {
    Move { tool: Side, to: Vec3 },
    Jaw { tool: Side, value: f64 },
    Wait { ticks: u64 },
    /// Exponentially distributed pause at the current skill level.
    Hesitate,
}

#[derive(Debug, Clone, Copy)]
enum Running {
    Move { tool: Side, from: Vec3, to: Vec3, ticks: u64, k: u64 },
    Wait { left: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Stage {
    Select,
    Grasping { ring: u8, picker: Side, dest: PegId },
    Handover { ring: u8, picker: Side, dest: PegId },
    Placing,
}

struct Learner {
    config: LearnerConfig,
    rng: Rng,
    home: [Vec3; 2],
    scale: f64,
    tick_hz: f64,
    level: SkillLevel,
    phase: Option<Phase>,
    origin: [Vec3; 2],
    tips: [Vec3; 2],
    jaws: [f64; 2],
    queue: VecDeque<Action>,
    running: Option<Running>,
    stage: Stage,
    source: Side,
}

impl Learner {
    fn new(scene: &SceneConfig, config: LearnerConfig, seed: u64) -> Self {
        let home = Sim::new(scene).tips().map(|t| t.translation);
        let origin = config.controller_origin;
        Self {
            level: config.levels[0],
            config,
            rng: rng(seed),
            home,
            scale: scene.teleop.translation_scale,
            tick_hz: scene.tick_hz as f64,
            phase: None,
            origin,
            tips: home,
            jaws: [0.0; 2],
            queue: VecDeque::new(),
            running: None,
            stage: Stage::Select,
            source: Side::Left,
        }
    }

    fn controller_position(&self, side: Side) -> Vec3 {
        let i = side.index();
        self.origin[i] + (self.tips[i] - self.home[i]) / self.scale
    }

    fn act(&mut self, session: &Session, t_us: u64) -> [ControllerInput; 2] {
        let phase = session.phase();
        if self.phase != Some(phase) {
            self.enter(phase);
        }
        if matches!(phase, Phase::Familiarization | Phase::Trial { .. }) {
            self.advance(session.engine().sim());
        }
        Side::BOTH.map(|s| {
            let i = s.index();
            controller_input(t_us, s, self.origin[i], self.tips[i], self.home[i], self.scale, self.jaws[i])
        })
    }

    /// A new phase starts from a freshly reset board: the hands stay where
    /// they are and become the new anchors for the home tips.
    fn enter(&mut self, phase: Phase) {
        self.origin = Side::BOTH.map(|s| self.controller_position(s));
        self.tips = self.home;
        self.jaws = [0.0; 2];
        self.queue.clear();
        self.running = None;
        self.stage = Stage::Select;
        self.source = Side::Left;
        self.level = self.config.level(phase);
        self.phase = Some(phase);
        self.queue.push_back(Action::Wait { ticks: 1 });
    }

    fn advance(&mut self, sim: &Sim) {
        loop {
            if let Some(run) = self.running.as_mut() {
                match run {
                    Running::Move { tool, from, to, ticks, k } => {
                        *k += 1;
                        let f = *k as f64 / *ticks as f64;
                        self.tips[tool.index()] = if *k == *ticks { *to } else { *from + (*to - *from) * f };
                        if *k == *ticks {
                            self.running = None;
                        }
                    }
                    Running::Wait { left } => {
                        *left -= 1;
                        if *left == 0 {
                            self.running = None;
                        }
                    }
                }
                return;
            }
            match self.queue.pop_front() {
                Some(Action::Move { tool, to }) => {
                    let from = self.tips[tool.index()];
                    let ticks = ((to.distance(from) / self.level.speed_mps) * self.tick_hz).ceil().max(1.0) as u64;
                    self.running = Some(Running::Move { tool, from, to, ticks, k: 0 });
                }
                Some(Action::Jaw { tool, value }) => {
                    self.jaws[tool.index()] = value;
                    return;
                }
                Some(Action::Wait { ticks }) => {
                    if ticks > 0 {
                        self.running = Some(Running::Wait { left: ticks });
                    }
                }
                Some(Action::Hesitate) => {
                    let mean = self.level.hesitation_s;
                    let ticks = if mean > 0.0 {
                        let pause = Exp::new(1.0 / mean).expect("positive rate").sample(&mut self.rng);
                        (pause * self.tick_hz).round() as u64
                    } else {
                        0
                    };
                    if ticks > 0 {
                        self.running = Some(Running::Wait { left: ticks });
                    }
                }
                None => self.plan(sim),
            }
        }
    }

    fn jitter(&mut self, p: Vec3) -> Vec3 {
        let sigma = self.level.aim_sigma_m;
        if sigma <= 0.0 {
            return p;
        }
        let n = Normal::new(0.0, sigma).expect("finite sigma");
        p + Vec3::new(n.sample(&mut self.rng), n.sample(&mut self.rng), n.sample(&mut self.rng))
    }

    fn push(&mut self, actions: impl IntoIterator<Item = Action>) {
        self.queue.extend(actions);
    }

    fn plan(&mut self, sim: &Sim) {
        match self.stage {
            Stage::Select => self.select(sim),
            Stage::Grasping { ring, picker, dest } => {
                if sim.rings()[ring as usize].held_by(picker) {
                    let center = sim.rings()[ring as usize].pose.translation;
                    let offset = sim.tips()[picker.index()].translation - center;
                    let handover = Vec3::new(0.0, HANDOVER_Y, 0.0);
                    let side_z = if offset.z >= 0.0 { -1.0 } else { 1.0 };
                    let aim = self.jitter(handover + Vec3::new(0.0, GRIP_RISE, side_z * 0.012));
                    let receiver = picker.other();
                    self.push([
                        Action::Hesitate,
                        Action::Move { tool: picker, to: handover + offset },
                        Action::Hesitate,
                        Action::Move { tool: receiver, to: aim + Vec3::new(0.0, APPROACH_RISE, 0.0) },
                        Action::Move { tool: receiver, to: aim },
                        Action::Jaw { tool: receiver, value: 1.0 },
                        Action::Hesitate,
                        Action::Jaw { tool: picker, value: 0.0 },
                    ]);
                    self.stage = Stage::Handover { ring, picker, dest };
                } else {
                    // missed: open, back off and look again
                    let up = self.tips[picker.index()] + Vec3::new(0.0, APPROACH_RISE, 0.0);
                    self.push([Action::Jaw { tool: picker, value: 0.0 }, Action::Move { tool: picker, to: up }]);
                    self.stage = Stage::Select;
                }
            }
            Stage::Handover { ring, picker, dest } => {
                let receiver = picker.other();
                let home_picker = self.home[picker.index()];
                if sim.rings()[ring as usize].held_by(receiver) {
                    let center = sim.rings()[ring as usize].pose.translation;
                    let offset = sim.tips()[receiver.index()].translation - center;
                    let peg = sim.pegs().iter().find(|p| p.id == dest).expect("destination peg exists").base;
                    let mut target = self.jitter(peg + Vec3::new(0.0, PLACE_Y, 0.0));
                    target.y = PLACE_Y;
                    self.push([
                        Action::Move { tool: picker, to: home_picker },
                        Action::Hesitate,
                        Action::Move { tool: receiver, to: target + offset + Vec3::new(0.0, APPROACH_RISE, 0.0) },
                        Action::Move { tool: receiver, to: target + offset },
                        Action::Hesitate,
                        Action::Jaw { tool: receiver, value: 0.0 },
                    ]);
                    self.stage = Stage::Placing;
                } else {
                    self.push([
                        Action::Move { tool: picker, to: home_picker },
                        Action::Jaw { tool: receiver, value: 0.0 },
                    ]);
                    self.stage = Stage::Placing;
                }
            }
            Stage::Placing => {
                let side = self.source.other();
                let up = self.tips[side.index()] + Vec3::new(0.0, APPROACH_RISE, 0.0);
                let home = self.home[side.index()];
                self.push([Action::Move { tool: side, to: up }, Action::Move { tool: side, to: home }]);
                self.stage = Stage::Select;
            }
        }
    }

    fn select(&mut self, sim: &Sim) {
        let on_side = |side: Side| {
            sim.rings().iter().filter_map(move |r| match r.phase {
                RingPhase::OnPeg { peg } if peg.side == side => Some((r.id, peg)),
                _ => None,
            })
        };
        let settled = sim.rings().iter().all(|r| matches!(r.phase, RingPhase::OnPeg { .. }));
        if on_side(self.source).next().is_none() && settled {
            self.source = self.source.other();
        }
        let free_dest = sim
            .pegs()
            .iter()
            .map(|p| p.id)
            .find(|id| id.side == self.source.other() && !sim.rings().iter().any(|r| r.phase == RingPhase::OnPeg { peg: *id }));
        let (Some((ring, _)), Some(dest)) = (on_side(self.source).next(), free_dest) else {
            self.push([Action::Wait { ticks: 10 }]);
            return;
        };
        let picker = self.source;
        let center = sim.rings()[ring as usize].pose.translation;
        let side_z = if picker == Side::Left { 1.0 } else { -1.0 };
        let aim = self.jitter(center + Vec3::new(0.0, GRIP_RISE, side_z * 0.012));
        self.push([
            Action::Hesitate,
            Action::Move { tool: picker, to: aim + Vec3::new(0.0, APPROACH_RISE, 0.0) },
            Action::Move { tool: picker, to: aim },
            Action::Jaw { tool: picker, value: 1.0 },
        ]);
        self.stage = Stage::Grasping { ring, picker, dest };
    }
}
