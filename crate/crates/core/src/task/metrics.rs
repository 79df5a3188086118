use serde::{Deserialize, Serialize};

use super::{Event, EventKind, Protocol};
use crate::{Micros, Vec3};

/// Scores of one timed trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trial_id: u32,
    pub duration_s: f64,
    pub transfers: u32,
    pub drops: u32,
    /// `None` when no transfer was completed.
    pub avg_transfer_time_s: Option<f64>,
    pub total_path_length_m: f64,
    pub left_path_length_m: f64,
    pub right_path_length_m: f64,
    /// The input stream ended before the trial did.
    pub truncated_input: bool,
    pub events: Vec<Event>,
}

/// Trial-over-trial change relative to the first trial, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialImprovement {
    pub trial_id: u32,
    /// `100·(n_k − n_1)/n_1`; `None` when the first trial had none.
    pub transfers_change_pct: Option<f64>,
    pub drops_change_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub protocol: Protocol,
    pub trials: Vec<TrialReport>,
    pub improvements: Vec<TrialImprovement>,
}

impl SessionReport {
    pub fn new(protocol: Protocol, trials: Vec<TrialReport>) -> Self {
        let improvements = match trials.first() {
            Some(first) => trials
                .iter()
                .skip(1)
                .map(|t| TrialImprovement {
                    trial_id: t.trial_id,
                    transfers_change_pct: improvement_pct(first.transfers as f64, t.transfers as f64),
                    drops_change_pct: improvement_pct(first.drops as f64, t.drops as f64),
                })
                .collect(),
            None => Vec::new(),
        };
        Self { protocol, trials, improvements }
    }
}

/// Relative change from `first` to `current` in percent.
pub fn improvement_pct(first: f64, current: f64) -> Option<f64> {
    if first == 0.0 {
        None
    } else {
        Some(100.0 * (current - first) / first)
    }
}

/// Polyline length.
pub fn path_length(points: &[Vec3]) -> f64 {
    points.windows(2).map(|w| w[1].distance(w[0])).sum()
}

/// Builds a trial report from its event list and the two tips' path
/// lengths.
pub fn compute_metrics(
    trial_id: u32,
    duration_s: f64,
    events: Vec<Event>,
    path_lengths: [f64; 2],
    truncated_input: bool,
) -> TrialReport {
    let mut transfers = 0u32;
    let mut drops = 0u32;
    let mut total_us: Micros = 0;
    for e in &events {
        match e.kind {
            EventKind::Transfer { duration_us, .. } => {
                transfers += 1;
                total_us += duration_us;
            }
            EventKind::Drop { .. } => drops += 1,
            _ => {}
        }
    }
    let avg_transfer_time_s = (transfers > 0).then(|| total_us as f64 / transfers as f64 * 1e-6);
    TrialReport {
        trial_id,
        duration_s,
        transfers,
        drops,
        avg_transfer_time_s,
        total_path_length_m: path_lengths[0] + path_lengths[1],
        left_path_length_m: path_lengths[0],
        right_path_length_m: path_lengths[1],
        truncated_input,
        events,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::PegId;
    use crate::Side;

    fn transfer(t_us: Micros, duration_us: Micros) -> Event {
        Event {
            t_us,
            kind: EventKind::Transfer {
                ring: 0,
                source_peg: PegId::new(Side::Left, 0),
                dest_peg: PegId::new(Side::Right, 0),
                duration_us,
                handover: true,
            },
        }
    }

    #[test]
    fn empty_trial() {
        let r = compute_metrics(1, 180.0, vec![], [0.0, 0.0], true);
        assert_eq!((r.transfers, r.drops, r.avg_transfer_time_s, r.total_path_length_m), (0, 0, None, 0.0));
    }

    #[test]
    fn counts_and_mean() {
        let events = vec![
            transfer(5_000_000, 4_000_000),
            Event { t_us: 6_000_000, kind: EventKind::Drop { ring: 1 } },
            transfer(9_000_000, 2_000_000),
        ];
        let r = compute_metrics(1, 180.0, events, [0.25, 0.5], false);
        assert_eq!((r.transfers, r.drops), (2, 1));
        assert_eq!(r.avg_transfer_time_s, Some(3.0));
        assert_eq!(r.total_path_length_m, 0.75);
    }

    #[test]
    fn straight_line_path() {
        let pts: Vec<Vec3> = (0..=300).map(|i| Vec3::new(i as f64 * 0.001, 0.0, 0.0)).collect();
        assert!((path_length(&pts) - 0.30).abs() < 1e-9);
    }

    #[test]
    fn improvement_examples() {
        assert_eq!(improvement_pct(100.0, 108.0), Some(8.0));
        assert_eq!(improvement_pct(100.0, 121.0), Some(21.0));
        assert_eq!(improvement_pct(100.0, 89.0), Some(-11.0));
        assert_eq!(improvement_pct(100.0, 67.0), Some(-33.0));
        assert_eq!(improvement_pct(0.0, 3.0), None);
    }

    #[test]
    fn session_improvements_relative_to_first_trial() {
        let mk = |id, transfers, drops| TrialReport {
            trial_id: id,
            duration_s: 180.0,
            transfers,
            drops,
            avg_transfer_time_s: None,
            total_path_length_m: 0.0,
            left_path_length_m: 0.0,
            right_path_length_m: 0.0,
            truncated_input: false,
            events: vec![],
        };
        let s = SessionReport::new(Protocol::default(), vec![mk(1, 100, 100), mk(2, 108, 89), mk(3, 121, 67)]);
        assert_eq!(s.improvements.len(), 2);
        assert_eq!(s.improvements[0].transfers_change_pct, Some(8.0));
        assert_eq!(s.improvements[1].transfers_change_pct, Some(21.0));
        assert_eq!(s.improvements[0].drops_change_pct, Some(-11.0));
        assert_eq!(s.improvements[1].drops_change_pct, Some(-33.0));
    }
}
