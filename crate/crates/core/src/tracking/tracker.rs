use serde::{Deserialize, Serialize};

use super::{MovingAverageFilter, TrackingConfig};
use crate::{Micros, Side, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackStatus {
    Tracked,
    /// No observation this frame; position extrapolated at constant velocity.
    Coasting,
    Lost,
}

impl TrackStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TrackStatus::Tracked => "tracked",
            TrackStatus::Coasting => "coasting",
            TrackStatus::Lost => "lost",
        }
    }
}

/// Published state of one controller's LED track (tracker frame).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkerTrack {
    pub controller_id: Side,
    pub position_raw: Vec3,
    pub position_smoothed: Vec3,
    pub status: TrackStatus,
    /// Time of the last real observation.
    pub last_update_us: Micros,
}

#[derive(Debug, Clone)]
struct TrackState {
    track: MarkerTrack,
    filter: MovingAverageFilter,
    velocity: Vec3,
    last_observed: Vec3,
}

impl TrackState {
    fn start(side: Side, p: Vec3, t_us: Micros, window: usize) -> Self {
        let mut filter = MovingAverageFilter::new(window);
        let smoothed = filter.smooth(p);
        Self {
            track: MarkerTrack {
                controller_id: side,
                position_raw: p,
                position_smoothed: smoothed,
                status: TrackStatus::Tracked,
                last_update_us: t_us,
            },
            filter,
            velocity: Vec3::ZERO,
            last_observed: p,
        }
    }

    fn is_active(&self) -> bool {
        self.track.status != TrackStatus::Lost
    }

    fn predict(&self, t_us: Micros) -> Vec3 {
        let dt = t_us.saturating_sub(self.track.last_update_us) as f64 * 1e-6;
        self.last_observed + self.velocity * dt
    }

    fn observe(&mut self, p: Vec3, t_us: Micros) {
        let dt = t_us.saturating_sub(self.track.last_update_us) as f64 * 1e-6;
        let prev_smoothed = self.track.position_smoothed;
        let smoothed = self.filter.smooth(p);
        if dt > 0.0 && self.track.status == TrackStatus::Tracked {
            self.velocity = (smoothed - prev_smoothed) / dt;
        }
        self.track.position_raw = p;
        self.track.position_smoothed = smoothed;
        self.track.status = TrackStatus::Tracked;
        self.track.last_update_us = t_us;
        self.last_observed = p;
    }

    fn miss(&mut self, t_us: Micros, coast_limit_us: Micros) {
        if !self.is_active() {
            return;
        }
        if t_us.saturating_sub(self.track.last_update_us) <= coast_limit_us {
            let p = self.predict(t_us);
            self.track.position_raw = p;
            self.track.position_smoothed = self.filter.smooth(p);
            self.track.status = TrackStatus::Coasting;
        } else {
            self.track.status = TrackStatus::Lost;
            self.velocity = Vec3::ZERO;
        }
    }
}

/// Outcome of one tracker update.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerUpdate {
    /// `None` until both controllers have been seen together once.
    pub tracks: Option<[MarkerTrack; 2]>,
    pub ambiguous: bool,
}

/// Keeps the Left/Right identity of the two single-LED controllers.
///
/// Identity is fixed at start-up by x-ordering in the tracker frame (the
/// left controller must start to the left), then maintained by gated
/// nearest-neighbour association against constant-velocity predictions.
#[derive(Debug, Clone)]
pub struct MarkerTracker {
    gate: f64,
    coast_limit_us: Micros,
    window: usize,
    states: Option<[TrackState; 2]>,
}

impl MarkerTracker {
    pub fn new(config: &TrackingConfig) -> Self {
        Self {
            gate: config.gate_m,
            coast_limit_us: config.coast_limit_ms * 1000,
            window: config.smoothing_window,
            states: None,
        }
    }

    pub fn tracks(&self) -> Option<[MarkerTrack; 2]> {
        self.states.as_ref().map(|s| [s[0].track, s[1].track])
    }

    pub fn update(&mut self, observations: &[Vec3], t_us: Micros) -> TrackerUpdate {
        let Some(states) = self.states.as_mut() else {
            let ambiguous = observations.len() > 2;
            if observations.len() == 2 {
                let (a, b) = (observations[0], observations[1]);
                let (l, r) = if a.x <= b.x { (a, b) } else { (b, a) };
                self.states = Some([
                    TrackState::start(Side::Left, l, t_us, self.window),
                    TrackState::start(Side::Right, r, t_us, self.window),
                ]);
            }
            return TrackerUpdate { tracks: self.tracks(), ambiguous };
        };

        // gated candidates per active track
        let mut gated: [Vec<(usize, f64)>; 2] = [Vec::new(), Vec::new()];
        for (k, st) in states.iter().enumerate() {
            if !st.is_active() {
                continue;
            }
            let pred = st.predict(t_us);
            for (i, o) in observations.iter().enumerate() {
                let d = o.distance(pred);
                if d <= self.gate {
                    gated[k].push((i, d));
                }
            }
        }
        let ambiguous = gated.iter().any(|g| g.len() > 1);

        // best joint assignment: most tracks matched, then least squared distance
        let mut best: (usize, f64, [Option<usize>; 2]) = (0, 0.0, [None, None]);
        let left_opts = std::iter::once(None).chain(gated[0].iter().map(|&(i, d)| Some((i, d))));
        for l in left_opts {
            let right_opts = std::iter::once(None).chain(gated[1].iter().map(|&(i, d)| Some((i, d))));
            for r in right_opts {
                if let (Some((li, _)), Some((ri, _))) = (l, r) {
                    if li == ri {
                        continue;
                    }
                }
                let count = l.is_some() as usize + r.is_some() as usize;
                let cost = l.map_or(0.0, |(_, d)| d * d) + r.map_or(0.0, |(_, d)| d * d);
                if count > best.0 || (count == best.0 && cost < best.1) {
                    best = (count, cost, [l.map(|x| x.0), r.map(|x| x.0)]);
                }
            }
        }
        let mut assignment = best.2;

        // re-acquire lost tracks from leftover observations
        let taken = |a: &[Option<usize>; 2], i: usize| a.iter().any(|&x| x == Some(i));
        let lost: Vec<usize> = (0..2).filter(|&k| !states[k].is_active()).collect();
        if lost.len() == 2 {
            let free: Vec<usize> = (0..observations.len()).collect();
            if free.len() == 2 {
                let (a, b) = (free[0], free[1]);
                let (l, r) = if observations[a].x <= observations[b].x { (a, b) } else { (b, a) };
                states[0] = TrackState::start(Side::Left, observations[l], t_us, self.window);
                states[1] = TrackState::start(Side::Right, observations[r], t_us, self.window);
                return TrackerUpdate { tracks: self.tracks(), ambiguous };
            }
        } else if lost.len() == 1 {
            let k = lost[0];
            let other = &states[1 - k];
            let anchor = states[k].track.position_raw;
            let candidate = (0..observations.len())
                .filter(|&i| !taken(&assignment, i))
                // keep the left/right ordering relative to the other controller
                .filter(|&i| {
                    let x = observations[i].x;
                    let ox = other.track.position_raw.x;
                    if k == 0 { x < ox } else { x > ox }
                })
                .min_by(|&a, &b| {
                    observations[a].distance(anchor).total_cmp(&observations[b].distance(anchor))
                });
            if let Some(i) = candidate {
                states[k] = TrackState::start(states[k].track.controller_id, observations[i], t_us, self.window);
                assignment[k] = None;
                let coast = self.coast_limit_us;
                let j = 1 - k;
                match assignment[j] {
                    Some(o) => states[j].observe(observations[o], t_us),
                    None => states[j].miss(t_us, coast),
                }
                return TrackerUpdate { tracks: self.tracks(), ambiguous };
            }
        }

        for (k, st) in states.iter_mut().enumerate() {
            match assignment[k] {
                Some(i) => st.observe(observations[i], t_us),
                None => st.miss(t_us, self.coast_limit_us),
            }
        }
        TrackerUpdate { tracks: self.tracks(), ambiguous }
    }
}
