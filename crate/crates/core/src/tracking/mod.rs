//! Single-LED marker tracking on a calibrated IR stereo rig.
//!
//! Per frame: threshold both images into blobs, pair blobs across the two
//! cameras, triangulate each pair with the ray midpoint method, then keep
//! the identity of the two controllers over time and smooth their
//! positions with a moving average.

mod blob;
mod smoothing;
mod stereo;
mod tracker;

pub use blob::{detect_blobs, Blob, IrFrame};
pub use smoothing::MovingAverageFilter;
pub use stereo::{correspond_stereo, triangulate_midpoint, StereoMatch, StereoRig, Triangulated};
pub use tracker::{MarkerTrack, MarkerTracker, TrackStatus, TrackerUpdate};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{Micros, Vec3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackingError {
    #[error("frame buffer holds {actual} pixels, expected {expected}")]
    FrameSize { expected: usize, actual: usize },
    #[error("rays are nearly parallel ({angle_deg:.4}° apart)")]
    DegenerateGeometry { angle_deg: f64 },
    #[error("rays miss each other by {gap} m")]
    GapTooLarge { gap: f64 },
    #[error("invalid stereo rig: {0}")]
    InvalidRig(String),
}

/// Tunables for the tracking pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackingConfig {
    /// Binary threshold on 0–255 intensities.
    pub threshold: u8,
    /// Components smaller than this (pixels) are discarded.
    pub min_area: usize,
    pub epipolar_tolerance_px: f64,
    /// Minimum angle between the two viewing rays.
    pub min_ray_angle_deg: f64,
    pub gap_reject_m: f64,
    /// Working depth range along the left camera's optical axis.
    pub min_depth_m: f64,
    pub max_depth_m: f64,
    pub max_controllers: usize,
    pub smoothing_window: usize,
    pub gate_m: f64,
    pub coast_limit_ms: u64,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        Self {
            threshold: 200,
            min_area: 3,
            epipolar_tolerance_px: 2.0,
            min_ray_angle_deg: 0.05,
            gap_reject_m: 0.005,
            min_depth_m: 0.1,
            max_depth_m: 1.5,
            max_controllers: 2,
            smoothing_window: 5,
            gate_m: 0.030,
            coast_limit_ms: 200,
        }
    }
}

/// Result of pushing one stereo frame through the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub t_us: Micros,
    pub points: Vec<Triangulated>,
    /// Pairs dropped by the gap / geometry checks.
    pub rejected: usize,
    /// More consistent stereo pairs than controllers.
    pub stereo_ambiguous: bool,
    /// Two observations fell inside one track's gate.
    pub track_ambiguous: bool,
    pub tracks: Option<[MarkerTrack; 2]>,
}

/// Stateful blob-to-track pipeline for one rig.
#[derive(Debug, Clone)]
pub struct StereoTracker {
    rig: StereoRig,
    config: TrackingConfig,
    tracker: MarkerTracker,
}

impl StereoTracker {
    pub fn new(rig: StereoRig, config: TrackingConfig) -> Self {
        let tracker = MarkerTracker::new(&config);
        Self { rig, config, tracker }
    }

    pub fn rig(&self) -> &StereoRig {
        &self.rig
    }

    pub fn config(&self) -> &TrackingConfig {
        &self.config
    }

    pub fn tracks(&self) -> Option<[MarkerTrack; 2]> {
        self.tracker.tracks()
    }

    pub fn process_images(&mut self, left: &IrFrame, right: &IrFrame) -> FrameResult {
        let lb = detect_blobs(left, self.config.threshold, self.config.min_area);
        let rb = detect_blobs(right, self.config.threshold, self.config.min_area);
        self.process_blobs(left.t_us, &lb, &rb)
    }

    pub fn process_blobs(&mut self, t_us: Micros, left: &[Blob], right: &[Blob]) -> FrameResult {
        let matched = correspond_stereo(left, right, &self.rig, &self.config);
        let mut points = Vec::with_capacity(matched.pairs.len());
        let mut rejected = 0;
        for pair in &matched.pairs {
            match triangulate_midpoint(pair, &self.rig, &self.config) {
                Ok(t) => points.push(t),
                Err(_) => rejected += 1,
            }
        }
        let positions: Vec<Vec3> = points.iter().map(|t| t.point).collect();
        let update = self.tracker.update(&positions, t_us);
        FrameResult {
            t_us,
            points,
            rejected,
            stereo_ambiguous: matched.ambiguous,
            track_ambiguous: update.ambiguous,
            tracks: update.tracks,
        }
    }
}
