use serde::{Deserialize, Serialize};

use super::{BoardConfig, Peg, PegId, SceneConfig};
use crate::kinematics::{forward_kinematics, solve_ik, IkConfig, InstrumentModel, JointVector};
use crate::teleop::{ModeChange, TipTarget};
use crate::{Micros, RigidTransform, Side, Vec3};

/// Something that happened during a session, stamped with the time since
/// the current phase began.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t_us: Micros,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Grasp { instrument: Side, ring: u8 },
    HandoverStarted { instrument: Side, ring: u8 },
    Handover { ring: u8, from: Side, to: Side },
    Release { instrument: Side, ring: u8 },
    Placement { ring: u8, peg: PegId, instrument: Option<Side> },
    Transfer { ring: u8, source_peg: PegId, dest_peg: PegId, duration_us: Micros, handover: bool },
    Drop { ring: u8 },
    Respawn { ring: u8, peg: PegId },
    IkWarning { instrument: Side },
    IkRecovered { instrument: Side },
    Mode { side: Option<Side>, change: ModeChange },
    FamiliarizationStart,
    TrialStart { trial: u32 },
    TrialEnd { trial: u32 },
    BreakStart { next_trial: u32 },
    SessionDone,
    SessionReset,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum RingPhase {
    OnPeg { peg: PegId },
    Grasped { instrument: Side },
    /// Held by both instruments; the ring follows `holder`.
    GraspedBoth { holder: Side },
    Falling { velocity: Vec3 },
    Respawning { ticks_left: u64 },
}

/// A ring's current lift-off, kept until it is placed or dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Journey {
    pub t_first_grasp_us: Micros,
    pub source_peg: PegId,
    pub handover: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ring {
    pub id: u8,
    /// Ring frame: origin at the ring center, +Y along the ring axis.
    pub pose: RigidTransform,
    pub phase: RingPhase,
    /// Peg the ring last rested on; a dropped ring returns here.
    pub origin_peg: PegId,
    grips: [Option<RigidTransform>; 2],
    journey: Option<Journey>,
}

impl Ring {
    pub fn origin_side(&self) -> Side {
        self.origin_peg.side
    }

    pub fn journey(&self) -> Option<Journey> {
        self.journey
    }

    pub fn held_by(&self, side: Side) -> bool {
        match self.phase {
            RingPhase::Grasped { instrument } => instrument == side,
            RingPhase::GraspedBoth { .. } => true,
            _ => false,
        }
    }

    fn center(&self) -> Vec3 {
        self.pose.translation
    }
}

/// A completed placement of a lifted ring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferRecord {
    pub ring_id: u8,
    pub t_first_grasp_us: Micros,
    pub t_placed_us: Micros,
    pub handover_occurred: bool,
    pub source_peg: PegId,
    pub dest_peg: PegId,
}

/// Whether a placement counts as a transfer.
pub fn classify_transfer(record: &TransferRecord, require_handover: bool) -> bool {
    record.dest_peg.side != record.source_peg.side && (record.handover_occurred || !require_handover)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentState {
    pub side: Side,
    pub model: InstrumentModel,
    pub joints: JointVector,
    pub tip: RigidTransform,
    pub jaw_command: f64,
    pub jaw_closed: bool,
    pub path_length: f64,
    pub ik_ok: bool,
}

impl InstrumentState {
    fn at_home(side: Side, model: InstrumentModel) -> Self {
        let joints = model.home();
        let tip = forward_kinematics(&model, &joints).expect("home is within limits");
        Self { side, model, joints, tip, jaw_command: 0.0, jaw_closed: false, path_length: 0.0, ik_ok: true }
    }
}

/// Distance from `p` to the ring's center circle.
fn circle_distance(ring: &RigidTransform, radius: f64, p: Vec3) -> f64 {
    let d = p - ring.translation;
    let axis = ring.rotation.rotate(Vec3::Y);
    let h = d.dot(axis);
    let r = (d - axis * h).norm();
    ((r - radius).powi(2) + h * h).sqrt()
}

fn horizontal_distance(a: Vec3, b: Vec3) -> f64 {
    (a.x - b.x).hypot(a.z - b.z)
}

/// The fixed-step board simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Sim {
    board: BoardConfig,
    ik: IkConfig,
    dt_us: Micros,
    dt_s: f64,
    respawn_ticks: u64,
    pegs: Vec<Peg>,
    rings: Vec<Ring>,
    instruments: [InstrumentState; 2],
    tick: u64,
}

impl Sim {
    pub fn new(scene: &SceneConfig) -> Self {
        let pegs = scene.board.pegs();
        let mut sim = Self {
            board: scene.board.clone(),
            ik: scene.ik,
            dt_us: scene.dt_us(),
            dt_s: scene.dt_s(),
            respawn_ticks: scene.seconds_to_ticks(scene.board.respawn_s),
            pegs,
            rings: Vec::new(),
            instruments: [
                InstrumentState::at_home(Side::Left, scene.instrument_model(Side::Left)),
                InstrumentState::at_home(Side::Right, scene.instrument_model(Side::Right)),
            ],
            tick: 0,
        };
        sim.reset();
        sim
    }

    /// Rings back on the left pegs, instruments home, clock and path
    /// lengths at zero.
    pub fn reset(&mut self) {
        self.rings = (0..self.board.ring_count)
            .map(|i| {
                let peg = self.pegs[i].id;
                Ring {
                    id: i as u8,
                    pose: self.rest_pose(peg),
                    phase: RingPhase::OnPeg { peg },
                    origin_peg: peg,
                    grips: [None; 2],
                    journey: None,
                }
            })
            .collect();
        for inst in &mut self.instruments {
            *inst = InstrumentState::at_home(inst.side, inst.model);
        }
        self.tick = 0;
    }

    pub fn time_us(&self) -> Micros {
        self.tick * self.dt_us
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn pegs(&self) -> &[Peg] {
        &self.pegs
    }

    pub fn rings(&self) -> &[Ring] {
        &self.rings
    }

    pub fn instruments(&self) -> &[InstrumentState; 2] {
        &self.instruments
    }

    pub fn instrument(&self, side: Side) -> &InstrumentState {
        &self.instruments[side.index()]
    }

    pub fn board(&self) -> &BoardConfig {
        &self.board
    }

    pub fn tips(&self) -> [RigidTransform; 2] {
        [self.instruments[0].tip, self.instruments[1].tip]
    }

    pub fn path_lengths(&self) -> [f64; 2] {
        [self.instruments[0].path_length, self.instruments[1].path_length]
    }

    fn peg(&self, id: PegId) -> &Peg {
        self.pegs.iter().find(|p| p.id == id).expect("peg ids come from the layout")
    }

    fn rest_pose(&self, peg: PegId) -> RigidTransform {
        RigidTransform::from_translation(self.peg(peg).base + Vec3::new(0.0, self.board.ring_rest_height, 0.0))
    }

    fn peg_free(&self, peg: PegId) -> bool {
        !self.rings.iter().any(|r| r.phase == RingPhase::OnPeg { peg })
    }

    /// Nearest free peg whose capture cylinder contains `p` below the
    /// placement ceiling.
    fn capture_peg(&self, p: Vec3) -> Option<PegId> {
        if !(p.y > 0.0 && p.y < self.board.peg_height + self.board.placement_margin) {
            return None;
        }
        self.pegs
            .iter()
            .filter(|peg| self.peg_free(peg.id))
            .map(|peg| (horizontal_distance(p, peg.base), peg.id))
            .filter(|(d, _)| *d < self.board.peg_capture_radius)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, id)| id)
    }

    /// Puts a ring into free fall from `height` (center), away from any
    /// instrument. Used to set up scenarios.
    pub fn drop_ring_from(&mut self, ring: u8, position: Vec3) {
        let r = &mut self.rings[ring as usize];
        r.pose = RigidTransform::from_translation(position);
        r.phase = RingPhase::Falling { velocity: Vec3::ZERO };
        r.grips = [None; 2];
        r.journey = None;
    }

    /// Advances one tick: IK toward the tip targets, carried rings, respawn
    /// timers, falling rings, then jaw-driven grasps and releases.
    pub fn step(&mut self, targets: &[TipTarget; 2]) -> Vec<Event> {
        self.tick += 1;
        let t = self.time_us();
        let mut events = Vec::new();

        for side in Side::BOTH {
            self.drive_instrument(side, &targets[side.index()], t, &mut events);
        }
        self.carry_rings();
        self.count_down_respawns(t, &mut events);
        self.integrate_falling(t, &mut events);
        for side in Side::BOTH {
            self.handle_jaw(side, t, &mut events);
        }
        events
    }

    fn drive_instrument(&mut self, side: Side, target: &TipTarget, t: Micros, events: &mut Vec<Event>) {
        let inst = &mut self.instruments[side.index()];
        inst.jaw_command = target.jaw_command.clamp(0.0, 1.0);
        let defaults = IkConfig::default();
        let solved = solve_ik(&inst.model, target, &inst.joints, &self.ik).ok().filter(|s| {
            s.converged
                || (s.position_error < defaults.position_tolerance && s.rotation_error < defaults.rotation_tolerance)
        });
        match solved {
            Some(sol) => {
                if sol.joints != inst.joints {
                    inst.joints = sol.joints;
                    let tip = forward_kinematics(&inst.model, &inst.joints).expect("solver output is within limits");
                    inst.path_length += tip.translation.distance(inst.tip.translation);
                    inst.tip = tip;
                }
                if !inst.ik_ok {
                    inst.ik_ok = true;
                    events.push(Event { t_us: t, kind: EventKind::IkRecovered { instrument: side } });
                }
            }
            None => {
                if inst.ik_ok {
                    inst.ik_ok = false;
                    events.push(Event { t_us: t, kind: EventKind::IkWarning { instrument: side } });
                }
            }
        }
    }

    fn carry_rings(&mut self) {
        let tips = self.tips();
        for ring in &mut self.rings {
            let holder = match ring.phase {
                RingPhase::Grasped { instrument } => instrument,
                RingPhase::GraspedBoth { holder } => holder,
                _ => continue,
            };
            if let Some(grip) = ring.grips[holder.index()] {
                ring.pose = tips[holder.index()].compose(&grip);
            }
        }
    }

    fn integrate_falling(&mut self, t: Micros, events: &mut Vec<Event>) {
        for i in 0..self.rings.len() {
            let RingPhase::Falling { velocity } = self.rings[i].phase else { continue };
            let ring = &mut self.rings[i];
            ring.pose.translation += velocity * self.dt_s;
            let velocity = velocity - Vec3::new(0.0, self.board.gravity * self.dt_s, 0.0);
            ring.phase = RingPhase::Falling { velocity };

            let center = ring.center();
            if let Some(peg) = self.capture_peg(center) {
                self.place(i, peg, None, t, events);
            } else if center.y <= 0.0 {
                let ring = &mut self.rings[i];
                ring.pose.translation.y = 0.0;
                ring.journey = None;
                ring.phase = RingPhase::Respawning { ticks_left: self.respawn_ticks };
                events.push(Event { t_us: t, kind: EventKind::Drop { ring: ring.id } });
                if self.respawn_ticks == 0 {
                    self.respawn(i, t, events);
                }
            }
        }
    }

    fn count_down_respawns(&mut self, t: Micros, events: &mut Vec<Event>) {
        for i in 0..self.rings.len() {
            let RingPhase::Respawning { ticks_left } = self.rings[i].phase else { continue };
            let left = ticks_left.saturating_sub(1);
            self.rings[i].phase = RingPhase::Respawning { ticks_left: left };
            if left == 0 {
                self.respawn(i, t, events);
            }
        }
    }

    fn respawn(&mut self, i: usize, t: Micros, events: &mut Vec<Event>) {
        let origin = self.rings[i].origin_peg;
        let peg = if self.peg_free(origin) {
            origin
        } else {
            self.pegs
                .iter()
                .filter(|p| self.peg_free(p.id))
                .min_by_key(|p| (p.id.side != origin.side, p.id))
                .map(|p| p.id)
                .expect("more pegs than rings")
        };
        let pose = self.rest_pose(peg);
        let ring = &mut self.rings[i];
        ring.pose = pose;
        ring.phase = RingPhase::OnPeg { peg };
        ring.origin_peg = peg;
        events.push(Event { t_us: t, kind: EventKind::Respawn { ring: ring.id, peg } });
    }

    fn place(&mut self, i: usize, peg: PegId, instrument: Option<Side>, t: Micros, events: &mut Vec<Event>) {
        let pose = self.rest_pose(peg);
        let require_handover = self.board.require_handover;
        let ring = &mut self.rings[i];
        ring.pose = pose;
        ring.phase = RingPhase::OnPeg { peg };
        ring.grips = [None; 2];
        ring.origin_peg = peg;
        events.push(Event { t_us: t, kind: EventKind::Placement { ring: ring.id, peg, instrument } });
        if let Some(j) = ring.journey.take() {
            let record = TransferRecord {
                ring_id: ring.id,
                t_first_grasp_us: j.t_first_grasp_us,
                t_placed_us: t,
                handover_occurred: j.handover,
                source_peg: j.source_peg,
                dest_peg: peg,
            };
            if classify_transfer(&record, require_handover) {
                events.push(Event {
                    t_us: t,
                    kind: EventKind::Transfer {
                        ring: ring.id,
                        source_peg: record.source_peg,
                        dest_peg: peg,
                        duration_us: record.t_placed_us - record.t_first_grasp_us,
                        handover: record.handover_occurred,
                    },
                });
            }
        }
    }

    fn handle_jaw(&mut self, side: Side, t: Micros, events: &mut Vec<Event>) {
        let inst = &mut self.instruments[side.index()];
        if !inst.jaw_closed && inst.jaw_command >= self.board.jaw_close_threshold {
            inst.jaw_closed = true;
            self.try_grasp(side, t, events);
        } else if inst.jaw_closed && inst.jaw_command <= self.board.jaw_open_threshold {
            inst.jaw_closed = false;
            self.release(side, t, events);
        }
    }

    /// Grasps the ring whose center circle is nearest the tip, if within
    /// the grasp radius. A ring already held by the other instrument
    /// becomes held by both.
    pub fn try_grasp(&mut self, side: Side, t: Micros, events: &mut Vec<Event>) -> bool {
        if self.rings.iter().any(|r| r.held_by(side)) {
            return false;
        }
        let tip = self.instruments[side.index()].tip;
        let nearest = self
            .rings
            .iter()
            .enumerate()
            .filter(|(_, r)| matches!(r.phase, RingPhase::OnPeg { .. } | RingPhase::Grasped { .. }))
            .map(|(i, r)| (circle_distance(&r.pose, self.board.ring_radius, tip.translation), i))
            .min_by(|a, b| a.0.total_cmp(&b.0));
        let Some((distance, i)) = nearest else { return false };
        if distance > self.board.grasp_radius {
            return false;
        }
        let ring = &mut self.rings[i];
        ring.grips[side.index()] = Some(tip.inverse().compose(&ring.pose));
        match ring.phase {
            RingPhase::OnPeg { peg } => {
                ring.phase = RingPhase::Grasped { instrument: side };
                ring.journey = Some(Journey { t_first_grasp_us: t, source_peg: peg, handover: false });
                events.push(Event { t_us: t, kind: EventKind::Grasp { instrument: side, ring: ring.id } });
            }
            RingPhase::Grasped { instrument } => {
                ring.phase = RingPhase::GraspedBoth { holder: instrument };
                events.push(Event { t_us: t, kind: EventKind::HandoverStarted { instrument: side, ring: ring.id } });
            }
            _ => unreachable!("filtered above"),
        }
        true
    }

    /// Opens the jaw on whatever `side` holds: completes a handover, places
    /// the ring on a peg, or lets it fall.
    pub fn release(&mut self, side: Side, t: Micros, events: &mut Vec<Event>) {
        let Some(i) = self.rings.iter().position(|r| r.held_by(side)) else { return };
        let tips = self.tips();
        let ring = &mut self.rings[i];
        ring.grips[side.index()] = None;
        if let RingPhase::GraspedBoth { .. } = ring.phase {
            let to = side.other();
            ring.grips[to.index()] = Some(tips[to.index()].inverse().compose(&ring.pose));
            ring.phase = RingPhase::Grasped { instrument: to };
            if let Some(j) = ring.journey.as_mut() {
                j.handover = true;
            }
            events.push(Event { t_us: t, kind: EventKind::Handover { ring: ring.id, from: side, to } });
            return;
        }
        events.push(Event { t_us: t, kind: EventKind::Release { instrument: side, ring: ring.id } });
        let center = ring.center();
        match self.capture_peg(center) {
            Some(peg) => self.place(i, peg, Some(side), t, events),
            None => self.rings[i].phase = RingPhase::Falling { velocity: Vec3::ZERO },
        }
    }

    /// Structural checks that must hold after every tick.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.rings.len() != self.board.ring_count {
            return Err(format!("{} rings, expected {}", self.rings.len(), self.board.ring_count));
        }
        let mut occupied = std::collections::BTreeSet::new();
        for r in &self.rings {
            if let RingPhase::OnPeg { peg } = r.phase {
                if !occupied.insert(peg) {
                    return Err(format!("peg {peg} holds two rings"));
                }
                let base = self.peg(peg).base;
                if horizontal_distance(r.center(), base) != 0.0 {
                    return Err(format!("ring {} is off the axis of {peg}", r.id));
                }
            }
        }
        for side in Side::BOTH {
            let held = self.rings.iter().filter(|r| r.held_by(side)).count();
            if held > 1 {
                return Err(format!("{side} instrument holds {held} rings"));
            }
            if held == 1 && !self.instruments[side.index()].jaw_closed {
                return Err(format!("{side} instrument holds a ring with an open jaw"));
            }
        }
        for inst in &self.instruments {
            if !inst.joints.within_limits(&inst.model) {
                return Err(format!("{} joints out of limits", inst.side));
            }
        }
        Ok(())
    }
}
