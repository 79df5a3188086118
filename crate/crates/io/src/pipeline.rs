//! Replay records to engine inputs: blobs or frames through the stereo
//! tracker, IMU packets through the orientation filters, fused into one
//! controller sample per IMU packet.

use std::path::{Path, PathBuf};

use dextrain_core::imu::OrientationFilter;
use dextrain_core::task::{ControllerInput, InputPose};
use dextrain_core::teleop::fuse_pose;
use dextrain_core::tracking::{Blob, MarkerTrack, StereoTracker, TrackStatus};
use dextrain_core::{Micros, RigidTransform, Side, UnitQuat, Vec3};
use serde::{Deserialize, Serialize};

use crate::calib::CalibrationFile;
use crate::packet::ControllerPacket;
use crate::replay::ReplayRecord;
use crate::{pgm, IoError};

/// One controller's track after a stereo frame, in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackRow {
    pub t_us: Micros,
    pub controller: Side,
    pub raw: Vec3,
    pub smooth: Vec3,
    pub q: UnitQuat,
    pub status: TrackStatus,
}

/// Counters for records the pipeline had to skip.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PipelineStats {
    pub frames: usize,
    pub packets: usize,
    pub bad_packets: usize,
    pub imu_rejected: usize,
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct PipelineStep {
    pub inputs: Vec<ControllerInput>,
    pub rows: Vec<TrackRow>,
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    tracker: StereoTracker,
    tracker_to_world: RigidTransform,
    alpha: f64,
    grip_point_offset: Vec3,
    frame_dir: PathBuf,
    filters: [Option<OrientationFilter>; 2],
    stats: PipelineStats,
}

impl Pipeline {
    pub fn new(calib: &CalibrationFile, grip_point_offset: Vec3) -> Result<Self, IoError> {
        calib.validate()?;
        Ok(Self {
            tracker: StereoTracker::new(calib.rig()?, calib.tracking.clone()),
            tracker_to_world: calib.tracker_to_world,
            alpha: calib.imu.alpha,
            grip_point_offset,
            frame_dir: PathBuf::from("."),
            filters: [None; 2],
            stats: PipelineStats::default(),
        })
    }

    /// Directory that frame paths are resolved against.
    pub fn with_frame_dir(mut self, dir: &Path) -> Self {
        self.frame_dir = dir.to_path_buf();
        self
    }

    pub fn stats(&self) -> PipelineStats {
        self.stats
    }

    pub fn orientation(&self, side: Side) -> Option<UnitQuat> {
        self.filters[side.index()].map(|f| f.q)
    }

    pub fn tracks(&self) -> Option<[MarkerTrack; 2]> {
        self.tracker.tracks()
    }

    pub fn push(&mut self, record: &ReplayRecord) -> Result<PipelineStep, IoError> {
        let mut step = PipelineStep::default();
        match record {
            ReplayRecord::Input(i) => step.inputs.push(*i),
            ReplayRecord::Imu(p) => step.inputs.extend(self.packet(p)),
            ReplayRecord::Blobs(b) => {
                let blobs = |c: &[[f64; 2]]| c.iter().map(|&[u, v]| Blob::at(u, v)).collect::<Vec<_>>();
                let res = self.tracker.process_blobs(b.t_us, &blobs(&b.left), &blobs(&b.right));
                step.rows = self.rows(res.t_us, res.tracks);
            }
            ReplayRecord::Frame(f) => {
                let left = pgm::read_pgm(&self.frame_dir.join(&f.left), f.t_us)?;
                let right = pgm::read_pgm(&self.frame_dir.join(&f.right), f.t_us)?;
                let res = self.tracker.process_images(&left, &right);
                step.rows = self.rows(res.t_us, res.tracks);
            }
        }
        Ok(step)
    }

    fn rows(&mut self, t_us: Micros, tracks: Option<[MarkerTrack; 2]>) -> Vec<TrackRow> {
        self.stats.frames += 1;
        let Some(tracks) = tracks else { return Vec::new() };
        tracks
            .iter()
            .map(|t| TrackRow {
                t_us,
                controller: t.controller_id,
                raw: self.tracker_to_world.transform_point(t.position_raw),
                smooth: self.tracker_to_world.transform_point(t.position_smoothed),
                q: self.orientation(t.controller_id).unwrap_or(UnitQuat::IDENTITY),
                status: t.status,
            })
            .collect()
    }

    fn packet(&mut self, p: &ControllerPacket) -> Option<ControllerInput> {
        self.stats.packets += 1;
        let Ok(side) = p.controller() else {
            self.stats.bad_packets += 1;
            return None;
        };
        let sample = p.imu_sample();
        let slot = &mut self.filters[side.index()];
        let q = match slot {
            None => match OrientationFilter::init_from_accel(&sample, self.alpha) {
                Ok(f) => {
                    *slot = Some(f);
                    Some(f.q)
                }
                Err(_) => {
                    self.stats.imu_rejected += 1;
                    None
                }
            },
            Some(f) => match f.update(&sample) {
                Ok(q) => Some(q),
                Err(_) => {
                    self.stats.imu_rejected += 1;
                    return None;
                }
            },
        };
        let track = self.tracker.tracks().map(|t| t[side.index()]);
        let pose = match (track, q) {
            (Some(track), Some(q)) => fuse_pose(&track, q, &self.tracker_to_world, self.grip_point_offset, p.t_us)
                .ok()
                .map(|c| InputPose { p: c.position, q: c.orientation }),
            _ => None,
        };
        Some(ControllerInput { t_us: p.t_us, controller: side, pose, button: p.button(), jaw: p.jaw_command() })
    }
}

/// Runs a whole recording through the pipeline.
pub fn replay_to_inputs(
    records: &[ReplayRecord],
    calib: &CalibrationFile,
    grip_point_offset: Vec3,
    frame_dir: &Path,
) -> Result<(Vec<ControllerInput>, Vec<TrackRow>), IoError> {
    let mut pipeline = Pipeline::new(calib, grip_point_offset)?.with_frame_dir(frame_dir);
    let mut inputs = Vec::new();
    let mut rows = Vec::new();
    for r in records {
        let step = pipeline.push(r)?;
        inputs.extend(step.inputs);
        rows.extend(step.rows);
    }
    Ok((inputs, rows))
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    t_us: Micros,
    controller: Side,
    raw_x: f64,
    raw_y: f64,
    raw_z: f64,
    smooth_x: f64,
    smooth_y: f64,
    smooth_z: f64,
    qw: f64,
    qx: f64,
    qy: f64,
    qz: f64,
    status: TrackStatus,
}

pub fn write_pose_csv<W: std::io::Write>(out: W, rows: &[TrackRow]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        let [qw, qx, qy, qz] = r.q.to_array();
        w.serialize(CsvRow {
            t_us: r.t_us,
            controller: r.controller,
            raw_x: r.raw.x,
            raw_y: r.raw.y,
            raw_z: r.raw.z,
            smooth_x: r.smooth.x,
            smooth_y: r.smooth.y,
            smooth_z: r.smooth.z,
            qw,
            qx,
            qy,
            qz,
            status: r.status,
        })
        .map_err(|e| IoError::Invalid(e.to_string()))?;
    }
    w.flush().map_err(|e| IoError::Invalid(e.to_string()))
}

pub fn read_pose_csv<R: std::io::Read>(input: R) -> Result<Vec<TrackRow>, IoError> {
    csv::Reader::from_reader(input)
        .deserialize::<CsvRow>()
        .map(|r| {
            let r = r.map_err(|e| IoError::Parse(e.to_string()))?;
            Ok(TrackRow {
                t_us: r.t_us,
                controller: r.controller,
                raw: Vec3::new(r.raw_x, r.raw_y, r.raw_z),
                smooth: Vec3::new(r.smooth_x, r.smooth_y, r.smooth_z),
                q: UnitQuat::try_from([r.qw, r.qx, r.qy, r.qz]).map_err(|e| IoError::Parse(e.to_string()))?,
                status: r.status,
            })
        })
        .collect()
}
