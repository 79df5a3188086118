//! The engine thread. It owns the session (and, in raw mode, the tracking
//! pipeline), ticks it in real time and talks to clients through queues:
//! one inbound queue shared by all clients, an ordered outbox per client
//! for events, metrics, haptics and replies, and a latest-wins cell for
//! state snapshots.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{mpsc, Arc};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use dextrain_core::task::{
    ControllerInput, Event, EventKind, Phase, SceneConfig, Session, TrialCommand, TrialReport,
};
use dextrain_core::{Micros, Side};
use dextrain_io::replay::{write_replay, BlobRecord, ReplayRecord};
use dextrain_io::{CalibrationFile, ControllerPacket, Pipeline};
use tokio::sync::{mpsc as tmpsc, watch};

use crate::messages::{Inbound, InputMode, InstrumentMsg, Outbound, RingMsg, StateMsg};

pub type ClientId = u64;

/// Serialized outbound message, shared between clients.
pub type Frame = Arc<str>;

#[derive(Debug, Clone)]
pub struct HubConfig {
    pub scene: SceneConfig,
    pub input_mode: InputMode,
    /// Required in raw mode.
    pub calib: Option<CalibrationFile>,
    /// Where to write the inputs of a completed session as a replay file.
    pub record: Option<PathBuf>,
    pub snapshot_hz: u32,
}

impl HubConfig {
    pub fn new(scene: SceneConfig) -> Self {
        Self { scene, input_mode: InputMode::Pose, calib: None, record: None, snapshot_hz: 30 }
    }
}

#[derive(Debug)]
enum HubMsg {
    Register { client: ClientId, outbox: tmpsc::UnboundedSender<Frame> },
    Unregister { client: ClientId },
    Inbound { client: ClientId, msg: Inbound },
    Shutdown,
}

#[derive(Debug, thiserror::Error)]
pub enum HubError {
    #[error("raw input mode needs a calibration file")]
    MissingCalibration,
    #[error("invalid scene: {0}")]
    Scene(String),
    #[error(transparent)]
    Io(#[from] dextrain_io::IoError),
}

/// Handle to a running engine thread.
pub struct Hub {
    tx: mpsc::Sender<HubMsg>,
    snapshots: watch::Receiver<Option<Frame>>,
    next_client: Arc<AtomicU64>,
    thread: Option<JoinHandle<()>>,
}

impl Hub {
    pub fn start(config: HubConfig) -> Result<Self, HubError> {
        config.scene.validate().map_err(HubError::Scene)?;
        let pipeline = match config.input_mode {
            InputMode::Pose => None,
            InputMode::Raw => {
                let calib = config.calib.as_ref().ok_or(HubError::MissingCalibration)?;
                Some(Pipeline::new(calib, config.scene.teleop.grip_point_offset)?)
            }
        };
        let (tx, rx) = mpsc::channel();
        let (snap_tx, snapshots) = watch::channel(None);
        let mut engine = EngineLoop::new(config, pipeline, snap_tx);
        engine.publish_snapshot();
        let thread = std::thread::Builder::new()
            .name("engine".into())
            .spawn(move || engine.run(rx))
            .expect("engine thread spawns");
        Ok(Self { tx, snapshots, next_client: Arc::new(AtomicU64::new(1)), thread: Some(thread) })
    }

    /// Attaches a new client. Its outbox starts receiving with the next
    /// broadcast.
    pub fn connect(&self) -> ClientHandle {
        let id = self.next_client.fetch_add(1, Ordering::Relaxed);
        let (outbox_tx, outbox) = tmpsc::unbounded_channel();
        let _ = self.tx.send(HubMsg::Register { client: id, outbox: outbox_tx });
        let mut snapshots = self.snapshots.clone();
        snapshots.mark_unchanged();
        ClientHandle { id, tx: self.tx.clone(), outbox, snapshots }
    }

    /// Latest state snapshot, if the engine has produced one.
    pub fn latest_snapshot(&self) -> Option<Frame> {
        self.snapshots.borrow().clone()
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        let _ = self.tx.send(HubMsg::Shutdown);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for Hub {
    fn drop(&mut self) {
        self.stop();
    }
}

/// One client's view of the engine.
#[derive(Debug)]
pub struct ClientHandle {
    id: ClientId,
    tx: mpsc::Sender<HubMsg>,
    pub outbox: tmpsc::UnboundedReceiver<Frame>,
    pub snapshots: watch::Receiver<Option<Frame>>,
}

impl ClientHandle {
    pub fn id(&self) -> ClientId {
        self.id
    }

    /// Queues a message for the engine; false once the engine has stopped.
    pub fn send(&self, msg: Inbound) -> bool {
        self.tx.send(HubMsg::Inbound { client: self.id, msg }).is_ok()
    }
}

impl Drop for ClientHandle {
    fn drop(&mut self) {
        let _ = self.tx.send(HubMsg::Unregister { client: self.id });
    }
}

/// Session-relative copy of the inputs the engine consumed, replayable by
/// `run_session`.
#[derive(Debug, Default)]
struct Recorder {
    start_us: Option<Micros>,
    inputs: Vec<ControllerInput>,
}

impl Recorder {
    fn begin(&mut self, start_us: Micros, held: impl IntoIterator<Item = ControllerInput>) {
        self.start_us = Some(start_us);
        self.inputs = held.into_iter().map(|i| ControllerInput { t_us: 0, ..i }).collect();
    }

    fn push(&mut self, input: ControllerInput) {
        if let Some(start) = self.start_us {
            self.inputs.push(ControllerInput { t_us: input.t_us - start, ..input });
        }
    }

    fn clear(&mut self) {
        self.start_us = None;
        self.inputs.clear();
    }
}

struct EngineLoop {
    config: HubConfig,
    session: Session,
    pipeline: Option<Pipeline>,
    clients: HashMap<ClientId, tmpsc::UnboundedSender<Frame>>,
    last_client_t: HashMap<(ClientId, Side), Micros>,
    snapshots: watch::Sender<Option<Frame>>,
    last_snapshot_slot: Option<u64>,
    last_release: HashMap<u8, Side>,
    recorder: Recorder,
}

impl EngineLoop {
    fn new(config: HubConfig, pipeline: Option<Pipeline>, snapshots: watch::Sender<Option<Frame>>) -> Self {
        Self {
            session: Session::new(config.scene.clone()),
            config,
            pipeline,
            clients: HashMap::new(),
            last_client_t: HashMap::new(),
            snapshots,
            last_snapshot_slot: None,
            last_release: HashMap::new(),
            recorder: Recorder::default(),
        }
    }

    fn run(&mut self, rx: mpsc::Receiver<HubMsg>) {
        let dt = Duration::from_micros(self.session.scene().dt_us());
        let mut deadline = Instant::now() + dt;
        loop {
            loop {
                let now = Instant::now();
                if now >= deadline {
                    break;
                }
                match rx.recv_timeout(deadline - now) {
                    Ok(HubMsg::Shutdown) | Err(mpsc::RecvTimeoutError::Disconnected) => return,
                    Ok(msg) => self.handle(msg),
                    Err(mpsc::RecvTimeoutError::Timeout) => break,
                }
            }
            self.tick();
            deadline += dt;
            let now = Instant::now();
            if now > deadline + 10 * dt {
                tracing::warn!("engine fell behind real time; skipping ahead");
                deadline = now + dt;
            }
        }
    }

    fn handle(&mut self, msg: HubMsg) {
        match msg {
            HubMsg::Register { client, outbox } => {
                self.clients.insert(client, outbox);
            }
            HubMsg::Unregister { client } => {
                self.clients.remove(&client);
                self.last_client_t.retain(|(c, _), _| *c != client);
            }
            HubMsg::Inbound { client, msg } => {
                if let Err(e) = self.inbound(client, msg) {
                    self.reply(client, &Outbound::error(e));
                }
            }
            HubMsg::Shutdown => {}
        }
    }

    fn inbound(&mut self, client: ClientId, msg: Inbound) -> Result<(), String> {
        match (msg, self.config.input_mode) {
            (Inbound::Hello { .. }, _) => Err("hello was already received".into()),
            (Inbound::Trial { cmd }, _) => self.command(cmd),
            (Inbound::Input(m), InputMode::Pose) => {
                let input = m.validate()?;
                let key = (client, input.controller);
                if let Some(&prev) = self.last_client_t.get(&key) {
                    if input.t_us < prev {
                        return Err(format!("{} input at {} µs is older than {prev} µs", input.controller, input.t_us));
                    }
                }
                self.last_client_t.insert(key, input.t_us);
                self.apply(input)
            }
            (Inbound::Packet { data }, InputMode::Raw) => {
                let bytes = hex::decode(data.trim()).map_err(|e| format!("packet is not hex: {e}"))?;
                let packet = ControllerPacket::decode(&bytes).map_err(|e| e.to_string())?;
                self.raw(ReplayRecord::Imu(packet))
            }
            (Inbound::Blobs { t_us, left, right }, InputMode::Raw) => {
                self.raw(ReplayRecord::Blobs(BlobRecord { t_us, left, right }))
            }
            (Inbound::Input(_), InputMode::Raw) => Err("server expects packet and blobs messages (--input raw)".into()),
            (Inbound::Packet { .. } | Inbound::Blobs { .. }, InputMode::Pose) => {
                Err("server expects input messages (--input pose)".into())
            }
        }
    }

    fn raw(&mut self, record: ReplayRecord) -> Result<(), String> {
        let pipeline = self.pipeline.as_mut().expect("raw mode has a pipeline");
        let step = pipeline.push(&record).map_err(|e| e.to_string())?;
        for input in step.inputs {
            self.apply(input)?;
        }
        Ok(())
    }

    /// Stamps the input with the time of the tick that will consume it.
    fn apply(&mut self, input: ControllerInput) -> Result<(), String> {
        let input = ControllerInput { t_us: self.session.now_us() + self.session.scene().dt_us(), ..input };
        self.session.apply_input(input)?;
        self.recorder.push(input);
        Ok(())
    }

    fn command(&mut self, cmd: TrialCommand) -> Result<(), String> {
        let was_idle = self.session.phase() == Phase::Idle;
        let events = self.session.command(cmd)?;
        match cmd {
            TrialCommand::Reset => {
                self.recorder.clear();
                self.last_release.clear();
            }
            TrialCommand::Start if was_idle => {
                let engine = self.session.engine();
                let held: Vec<_> = Side::BOTH.iter().filter_map(|&s| engine.latest_input(s)).collect();
                self.recorder.begin(self.session.now_us(), held);
            }
            _ => {}
        }
        let report = match cmd {
            TrialCommand::Stop => self.session.reports().last().cloned(),
            _ => None,
        };
        self.dispatch_with_metrics(&events, report);
        self.after_phase_change();
        Ok(())
    }

    fn tick(&mut self) {
        let out = self.session.tick();
        self.dispatch_with_metrics(&out.events, out.trial_report);
        self.after_phase_change();
        self.maybe_snapshot();
    }

    /// Metrics follow their trial_end, ahead of the next phase's events.
    fn dispatch_with_metrics(&mut self, events: &[Event], report: Option<TrialReport>) {
        let split = events.iter().position(|e| matches!(e.kind, EventKind::TrialEnd { .. })).map_or(0, |i| i + 1);
        self.dispatch_events(&events[..split]);
        if let Some(report) = report {
            self.broadcast(&Outbound::Metrics(report));
        }
        self.dispatch_events(&events[split..]);
    }

    fn dispatch_events(&mut self, events: &[Event]) {
        for e in events {
            self.broadcast(&Outbound::event(e));
            match e.kind {
                EventKind::Grasp { instrument, .. } => self.haptic(instrument, 0.6, 40),
                EventKind::Release { instrument, ring } => {
                    self.last_release.insert(ring, instrument);
                }
                EventKind::Drop { ring } => {
                    if let Some(side) = self.last_release.get(&ring).copied() {
                        self.haptic(side, 1.0, 120);
                    }
                }
                _ => {}
            }
        }
    }

    fn haptic(&mut self, controller: Side, amplitude: f64, duration_ms: u32) {
        self.broadcast(&Outbound::Haptic { controller, amplitude, duration_ms });
    }

    /// Writes the recording once the protocol finishes. The final held
    /// samples are stamped at the end so the replay does not read as an
    /// input stream that stopped early.
    fn after_phase_change(&mut self) {
        if self.session.phase() != Phase::Done || self.recorder.start_us.is_none() {
            return;
        }
        let now = self.session.now_us();
        let held: Vec<_> = Side::BOTH.iter().filter_map(|&s| self.session.engine().latest_input(s)).collect();
        for input in held {
            self.recorder.push(ControllerInput { t_us: now, ..input });
        }
        if let Some(path) = &self.config.record {
            let records: Vec<_> = self.recorder.inputs.iter().map(|i| ReplayRecord::Input(*i)).collect();
            match write_replay(path, &records) {
                Ok(()) => tracing::info!(path = %path.display(), inputs = records.len(), "session recorded"),
                Err(e) => tracing::error!("writing recording: {e}"),
            }
        }
        self.recorder.clear();
    }

    fn maybe_snapshot(&mut self) {
        let slot = self.session.now_us() * self.config.snapshot_hz as u64 / 1_000_000;
        if self.last_snapshot_slot != Some(slot) {
            self.last_snapshot_slot = Some(slot);
            self.publish_snapshot();
        }
    }

    fn publish_snapshot(&mut self) {
        let frame: Frame = Outbound::State(self.state()).to_json().into();
        self.snapshots.send_replace(Some(frame));
    }

    fn state(&self) -> StateMsg {
        let engine = self.session.engine();
        let sim = engine.sim();
        let teleop = engine.teleop();
        StateMsg {
            t_us: self.session.phase_time_us(),
            session_t_us: self.session.now_us(),
            phase: self.session.phase(),
            instruments: sim
                .instruments()
                .iter()
                .map(|s| InstrumentMsg {
                    side: s.side,
                    joints: s.joints.q,
                    jaw: s.joints.jaw,
                    jaw_closed: s.jaw_closed,
                    tip: s.tip.into(),
                    mode: teleop.mode(s.side),
                    ik_ok: s.ik_ok,
                })
                .collect(),
            rings: sim.rings().iter().map(|r| RingMsg { id: r.id, pose: r.pose.into(), state: r.phase }).collect(),
            camera: engine.camera_pose().into(),
            mode: teleop.global_mode(),
        }
    }

    fn broadcast(&mut self, msg: &Outbound) {
        let frame: Frame = msg.to_json().into();
        self.clients.retain(|_, tx| tx.send(frame.clone()).is_ok());
    }

    fn reply(&mut self, client: ClientId, msg: &Outbound) {
        if let Some(tx) = self.clients.get(&client) {
            let _ = tx.send(msg.to_json().into());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dextrain_core::task::Protocol;

    fn short_scene() -> SceneConfig {
        SceneConfig {
            protocol: Protocol { familiarization_s: 0.05, trial_s: 0.1, trials: 2, break_s: 0.05 },
            ..SceneConfig::default()
        }
    }

    #[test]
    fn recorder_stamps_relative_to_start() {
        let mut r = Recorder::default();
        let i = ControllerInput { t_us: 0, controller: Side::Left, pose: None, button: false, jaw: 0.0 };
        r.push(ControllerInput { t_us: 500, ..i });
        assert!(r.inputs.is_empty());
        r.begin(1_000, [ControllerInput { t_us: 900, ..i }]);
        r.push(ControllerInput { t_us: 1_010, ..i });
        assert_eq!(r.inputs.iter().map(|i| i.t_us).collect::<Vec<_>>(), vec![0, 10]);
        r.clear();
        assert_eq!(r.start_us, None);
    }

    #[test]
    fn raw_mode_needs_calibration() {
        let config = HubConfig { input_mode: InputMode::Raw, ..HubConfig::new(short_scene()) };
        assert!(matches!(Hub::start(config), Err(HubError::MissingCalibration)));
    }

    #[test]
    fn idle_snapshot_shows_rings_on_pegs() {
        let hub = Hub::start(HubConfig::new(short_scene())).unwrap();
        let snap = hub.latest_snapshot().expect("published at start");
        let v: serde_json::Value = serde_json::from_str(&snap).unwrap();
        assert_eq!(v["type"], "state");
        assert_eq!(v["phase"]["phase"], "idle");
        assert_eq!(v["mode"], "normal");
        let rings = v["rings"].as_array().unwrap();
        assert_eq!(rings.len(), 6);
        assert!(rings.iter().all(|r| r["state"]["state"] == "on_peg" && r["state"]["peg"].as_str().unwrap().starts_with("left_")));
        hub.shutdown();
    }
}
