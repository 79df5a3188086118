use serde::{Deserialize, Serialize};

use super::{compute_metrics, Event, EventKind, SceneConfig, SessionReport, Sim, TrialReport};
use crate::teleop::{ControllerPose, TeleopInput, TeleopState};
use crate::{Micros, RigidTransform, Side, UnitQuat, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputPose {
    pub p: Vec3,
    pub q: UnitQuat,
}

/// One master-controller sample as consumed by the engine: a world pose
/// (or `None` while the controller is not tracked), the multifunction
/// button and the analog jaw channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerInput {
    pub t_us: Micros,
    pub controller: Side,
    pub pose: Option<InputPose>,
    pub button: bool,
    pub jaw: f64,
}

/// Teleoperation plus board simulation, stepped at a fixed rate from the
/// latest input of each controller.
#[derive(Debug, Clone)]
pub struct Engine {
    scene: SceneConfig,
    sim: Sim,
    teleop: TeleopState,
    latest: [Option<ControllerInput>; 2],
}

impl Engine {
    pub fn new(scene: SceneConfig) -> Self {
        let sim = Sim::new(&scene);
        let teleop = TeleopState::new(scene.teleop, sim.tips(), scene.camera_pose);
        Self { scene, sim, teleop, latest: [None; 2] }
    }

    pub fn scene(&self) -> &SceneConfig {
        &self.scene
    }

    pub fn sim(&self) -> &Sim {
        &self.sim
    }

    pub fn teleop(&self) -> &TeleopState {
        &self.teleop
    }

    pub fn camera_pose(&self) -> RigidTransform {
        self.teleop.camera_pose()
    }

    pub fn latest_input(&self, side: Side) -> Option<ControllerInput> {
        self.latest[side.index()]
    }

    /// Records a controller sample for the next tick. Samples older than
    /// the controller's latest are refused.
    pub fn apply_input(&mut self, input: ControllerInput) -> Result<(), String> {
        let slot = &mut self.latest[input.controller.index()];
        if let Some(prev) = slot {
            if input.t_us < prev.t_us {
                return Err(format!(
                    "{} input at {} µs is older than {} µs",
                    input.controller, input.t_us, prev.t_us
                ));
            }
        }
        *slot = Some(input);
        Ok(())
    }

    /// Scene back to its initial layout; controllers re-anchor on their
    /// next pose so the instruments do not jump.
    pub fn reset(&mut self) {
        self.sim.reset();
        self.teleop.reset_targets(self.sim.tips());
    }

    pub fn step(&mut self) -> Vec<Event> {
        let mut input = TeleopInput::default();
        for side in Side::BOTH {
            let Some(latest) = self.latest[side.index()] else { continue };
            input.buttons[side.index()] = latest.button;
            input.jaw[side.index()] = Some(latest.jaw);
            input.poses[side.index()] = latest.pose.map(|p| ControllerPose {
                controller_id: side,
                position: p.p,
                orientation: p.q,
                grip_point_offset: self.scene.teleop.grip_point_offset,
                t_us: latest.t_us,
            });
        }
        let out = self.teleop.step(&input);
        let mut events = self.sim.step(&out.targets);
        let t = self.sim.time_us();
        events.extend(
            out.events
                .into_iter()
                .map(|m| Event { t_us: t, kind: EventKind::Mode { side: m.side, change: m.change } }),
        );
        events
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum Phase {
    Idle,
    Familiarization,
    Trial { n: u32 },
    Break { next: u32 },
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialCommand {
    Start,
    Stop,
    Reset,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TickOutput {
    pub events: Vec<Event>,
    pub trial_report: Option<TrialReport>,
}

/// The training protocol around the engine: familiarization, timed
/// trials separated by breaks, then done. Only trial ticks are scored.
#[derive(Debug, Clone)]
pub struct Session {
    engine: Engine,
    phase: Phase,
    phase_ticks: u64,
    session_ticks: u64,
    recorded: Vec<Event>,
    reports: Vec<TrialReport>,
    input_end_us: Option<Micros>,
}

impl Session {
    pub fn new(scene: SceneConfig) -> Self {
        Self {
            engine: Engine::new(scene),
            phase: Phase::Idle,
            phase_ticks: 0,
            session_ticks: 0,
            recorded: Vec::new(),
            reports: Vec::new(),
            input_end_us: None,
        }
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn reports(&self) -> &[TrialReport] {
        &self.reports
    }

    /// Session clock: time of the last completed tick.
    pub fn now_us(&self) -> Micros {
        self.session_ticks * self.scene().dt_us()
    }

    /// Time since the current phase began.
    pub fn phase_time_us(&self) -> Micros {
        self.phase_ticks * self.scene().dt_us()
    }

    pub fn scene(&self) -> &SceneConfig {
        self.engine.scene()
    }

    pub fn apply_input(&mut self, input: ControllerInput) -> Result<(), String> {
        self.engine.apply_input(input)
    }

    /// Declares that no input after `last_t_us` will arrive; trials that
    /// end later are flagged as truncated.
    pub fn end_of_input(&mut self, last_t_us: Micros) {
        self.input_end_us = Some(last_t_us);
    }

    pub fn report(&self) -> SessionReport {
        SessionReport::new(self.scene().protocol, self.reports.clone())
    }

    fn ticks(&self, seconds: f64) -> u64 {
        self.scene().seconds_to_ticks(seconds)
    }

    fn event(&self, kind: EventKind) -> Event {
        Event { t_us: self.phase_time_us(), kind }
    }

    pub fn command(&mut self, cmd: TrialCommand) -> Result<Vec<Event>, String> {
        match (cmd, self.phase) {
            (TrialCommand::Start, Phase::Idle) => {
                if self.ticks(self.scene().protocol.familiarization_s) > 0 {
                    self.engine.reset();
                    self.enter(Phase::Familiarization);
                    Ok(vec![self.event(EventKind::FamiliarizationStart)])
                } else {
                    Ok(self.begin_trial(1))
                }
            }
            (TrialCommand::Start, Phase::Familiarization) => Ok(self.begin_trial(1)),
            (TrialCommand::Start, Phase::Break { next }) => Ok(self.begin_trial(next)),
            (TrialCommand::Stop, Phase::Trial { n }) => Ok(self.end_trial(n).events),
            (TrialCommand::Reset, _) => {
                self.engine.reset();
                self.reports.clear();
                self.recorded.clear();
                self.enter(Phase::Idle);
                Ok(vec![self.event(EventKind::SessionReset)])
            }
            (cmd, phase) => Err(format!("{cmd:?} is not valid during {phase:?}")),
        }
    }

    fn enter(&mut self, phase: Phase) {
        self.phase = phase;
        self.phase_ticks = 0;
    }

    fn begin_trial(&mut self, n: u32) -> Vec<Event> {
        self.engine.reset();
        self.enter(Phase::Trial { n });
        let e = self.event(EventKind::TrialStart { trial: n });
        self.recorded = vec![e.clone()];
        vec![e]
    }

    fn end_trial(&mut self, n: u32) -> TickOutput {
        let end = self.event(EventKind::TrialEnd { trial: n });
        self.recorded.push(end.clone());
        let truncated = self.input_end_us.is_some_and(|t| t < self.now_us());
        let report = compute_metrics(
            n,
            self.phase_time_us() as f64 * 1e-6,
            std::mem::take(&mut self.recorded),
            self.engine.sim().path_lengths(),
            truncated,
        );
        self.reports.push(report.clone());
        let mut events = vec![end];
        let protocol = self.scene().protocol;
        if n < protocol.trials {
            if self.ticks(protocol.break_s) > 0 {
                self.enter(Phase::Break { next: n + 1 });
                events.push(self.event(EventKind::BreakStart { next_trial: n + 1 }));
            } else {
                events.extend(self.begin_trial(n + 1));
            }
        } else {
            self.enter(Phase::Done);
            events.push(self.event(EventKind::SessionDone));
        }
        TickOutput { events, trial_report: Some(report) }
    }

    /// Advances the session clock by one tick.
    pub fn tick(&mut self) -> TickOutput {
        self.session_ticks += 1;
        let protocol = self.scene().protocol;
        match self.phase {
            Phase::Idle | Phase::Done => TickOutput::default(),
            Phase::Familiarization => {
                let events = self.engine.step();
                self.phase_ticks += 1;
                let mut out = TickOutput { events, trial_report: None };
                if self.phase_ticks >= self.ticks(protocol.familiarization_s) {
                    out.events.extend(self.begin_trial(1));
                }
                out
            }
            Phase::Trial { n } => {
                let events = self.engine.step();
                self.phase_ticks += 1;
                self.recorded.extend(events.iter().cloned());
                if self.phase_ticks >= self.ticks(protocol.trial_s) {
                    let mut out = self.end_trial(n);
                    let mut all = events;
                    all.append(&mut out.events);
                    out.events = all;
                    out
                } else {
                    TickOutput { events, trial_report: None }
                }
            }
            Phase::Break { next } => {
                self.phase_ticks += 1;
                if self.phase_ticks >= self.ticks(protocol.break_s) {
                    TickOutput { events: self.begin_trial(next), trial_report: None }
                } else {
                    TickOutput::default()
                }
            }
        }
    }
}

/// Runs a full protocol headless on a time-ordered input stream whose
/// timestamps count from session start.
pub fn run_session(scene: SceneConfig, inputs: impl IntoIterator<Item = ControllerInput>) -> SessionReport {
    let mut session = Session::new(scene);
    drive(&mut session, inputs);
    session.report()
}

/// Runs a single scored trial (no familiarization) with timestamps
/// counting from trial start.
pub fn run_trial(scene: SceneConfig, inputs: impl IntoIterator<Item = ControllerInput>) -> TrialReport {
    let mut scene = scene;
    scene.protocol.familiarization_s = 0.0;
    scene.protocol.trials = 1;
    let mut session = Session::new(scene);
    drive(&mut session, inputs);
    session.reports.pop().expect("one trial ran")
}

fn drive(session: &mut Session, inputs: impl IntoIterator<Item = ControllerInput>) {
    let mut inputs: Vec<ControllerInput> = inputs.into_iter().collect();
    inputs.sort_by_key(|i| i.t_us);
    let last = inputs.last().map_or(0, |i| i.t_us);
    let mut pending = inputs.into_iter().peekable();
    let dt = session.scene().dt_us();

    session.command(TrialCommand::Start).expect("fresh session starts");
    let mut ended = false;
    while session.phase() != Phase::Done {
        let next = session.now_us() + dt;
        while let Some(i) = pending.next_if(|i| i.t_us <= next) {
            // out-of-order samples are dropped
            let _ = session.apply_input(i);
        }
        if !ended && pending.peek().is_none() {
            session.end_of_input(last);
            ended = true;
        }
        session.tick();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::Protocol;

    fn short_scene() -> SceneConfig {
        SceneConfig {
            protocol: Protocol { familiarization_s: 1.0, trial_s: 2.0, trials: 3, break_s: 0.5 },
            ..SceneConfig::default()
        }
    }

    #[test]
    fn empty_input_trial() {
        let r = run_trial(SceneConfig::default(), []);
        assert_eq!(r.duration_s, 180.0);
        assert_eq!((r.transfers, r.drops, r.avg_transfer_time_s, r.total_path_length_m), (0, 0, None, 0.0));
        assert!(r.truncated_input);
        assert!(r.events.iter().all(|e| e.t_us <= 180_000_000));
    }

    #[test]
    fn protocol_runs_three_trials() {
        let s = run_session(short_scene(), []);
        assert_eq!(s.trials.len(), 3);
        assert_eq!(s.trials.iter().map(|t| t.trial_id).collect::<Vec<_>>(), vec![1, 2, 3]);
        for t in &s.trials {
            assert_eq!(t.duration_s, 2.0);
            assert!(t.events.iter().all(|e| e.t_us <= 2_000_000));
            assert_eq!(t.events.first().unwrap().kind, EventKind::TrialStart { trial: t.trial_id });
            assert_eq!(t.events.last().unwrap().kind, EventKind::TrialEnd { trial: t.trial_id });
        }
    }

    #[test]
    fn phases_follow_the_clock() {
        let mut s = Session::new(short_scene());
        assert_eq!(s.phase(), Phase::Idle);
        s.command(TrialCommand::Start).unwrap();
        assert_eq!(s.phase(), Phase::Familiarization);
        let mut seen = vec![s.phase()];
        while s.phase() != Phase::Done {
            s.tick();
            if *seen.last().unwrap() != s.phase() {
                seen.push(s.phase());
            }
        }
        assert_eq!(
            seen,
            vec![
                Phase::Familiarization,
                Phase::Trial { n: 1 },
                Phase::Break { next: 2 },
                Phase::Trial { n: 2 },
                Phase::Break { next: 3 },
                Phase::Trial { n: 3 },
                Phase::Done
            ]
        );
        // 1 + 3·2 + 2·0.5 s
        assert_eq!(s.now_us(), 8_000_000);
    }

    #[test]
    fn commands() {
        let mut s = Session::new(short_scene());
        assert!(s.command(TrialCommand::Stop).is_err());
        s.command(TrialCommand::Start).unwrap();
        s.command(TrialCommand::Start).unwrap();
        assert_eq!(s.phase(), Phase::Trial { n: 1 });
        for _ in 0..50 {
            s.tick();
        }
        let ev = s.command(TrialCommand::Stop).unwrap();
        assert_eq!(ev[0].kind, EventKind::TrialEnd { trial: 1 });
        assert_eq!(s.reports()[0].duration_s, 0.5);
        assert_eq!(s.phase(), Phase::Break { next: 2 });
        s.command(TrialCommand::Reset).unwrap();
        assert_eq!(s.phase(), Phase::Idle);
        assert!(s.reports().is_empty());
    }

    #[test]
    fn stale_inputs_are_refused() {
        let mut e = Engine::new(SceneConfig::default());
        let input = |t| ControllerInput { t_us: t, controller: Side::Left, pose: None, button: false, jaw: 0.0 };
        e.apply_input(input(10)).unwrap();
        assert!(e.apply_input(input(5)).is_err());
    }

    #[test]
    fn controller_motion_moves_the_tip_at_half_scale() {
        let mut e = Engine::new(SceneConfig::default());
        let start = e.sim().instrument(Side::Left).tip.translation;
        let pose = |x: f64| Some(InputPose { p: Vec3::new(x, 0.0, 0.0), q: UnitQuat::IDENTITY });
        e.apply_input(ControllerInput { t_us: 0, controller: Side::Left, pose: pose(0.0), button: false, jaw: 0.0 }).unwrap();
        e.step();
        e.apply_input(ControllerInput { t_us: 10_000, controller: Side::Left, pose: pose(0.01), button: false, jaw: 0.0 }).unwrap();
        e.step();
        let tip = e.sim().instrument(Side::Left).tip.translation;
        assert!((tip - start - Vec3::new(0.005, 0.0, 0.0)).norm() < 1e-9);
    }
}
