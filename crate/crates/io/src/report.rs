//! Canonical report documents.
//!
//! Keys appear in a fixed order, every real number is written with exactly
//! six decimals and nothing depends on the wall clock, so equal reports
//! always produce equal bytes and `write → parse → write` is the identity.

use std::path::Path;

use dextrain_core::task::{Event, Protocol, SessionReport, TrialImprovement, TrialReport};
use serde::ser::Error as _;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::IoError;

/// A real written as fixed-point with six decimals.
struct F6(f64);

impl Serialize for F6 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(S::Error::custom(format!("non-finite value {} in report", self.0)));
        }
        RawValue::from_string(format!("{:.6}", self.0)).map_err(S::Error::custom)?.serialize(s)
    }
}

#[derive(Serialize)]
struct TrialDoc<'a> {
    trial_id: u32,
    duration_s: F6,
    transfers: u32,
    drops: u32,
    avg_transfer_time_s: Option<F6>,
    total_path_length_m: F6,
    left_path_length_m: F6,
    right_path_length_m: F6,
    truncated_input: bool,
    events: &'a [Event],
}

impl<'a> From<&'a TrialReport> for TrialDoc<'a> {
    fn from(r: &'a TrialReport) -> Self {
        Self {
            trial_id: r.trial_id,
            duration_s: F6(r.duration_s),
            transfers: r.transfers,
            drops: r.drops,
            avg_transfer_time_s: r.avg_transfer_time_s.map(F6),
            total_path_length_m: F6(r.total_path_length_m),
            left_path_length_m: F6(r.left_path_length_m),
            right_path_length_m: F6(r.right_path_length_m),
            truncated_input: r.truncated_input,
            events: &r.events,
        }
    }
}

#[derive(Serialize)]
struct ProtocolDoc {
    familiarization_s: F6,
    trial_s: F6,
    trials: u32,
    break_s: F6,
}

impl From<&Protocol> for ProtocolDoc {
    fn from(p: &Protocol) -> Self {
        Self { familiarization_s: F6(p.familiarization_s), trial_s: F6(p.trial_s), trials: p.trials, break_s: F6(p.break_s) }
    }
}

#[derive(Serialize)]
struct ImprovementDoc {
    trial_id: u32,
    transfers_change_pct: Option<F6>,
    drops_change_pct: Option<F6>,
}

impl From<&TrialImprovement> for ImprovementDoc {
    fn from(i: &TrialImprovement) -> Self {
        Self {
            trial_id: i.trial_id,
            transfers_change_pct: i.transfers_change_pct.map(F6),
            drops_change_pct: i.drops_change_pct.map(F6),
        }
    }
}

#[derive(Serialize)]
struct SessionDoc<'a> {
    protocol: ProtocolDoc,
    trials: Vec<TrialDoc<'a>>,
    improvements: Vec<ImprovementDoc>,
}

fn pretty<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("finite report");
    s.push('\n');
    s
}

pub fn trial_report_json(r: &TrialReport) -> String {
    pretty(&TrialDoc::from(r))
}

pub fn session_report_json(r: &SessionReport) -> String {
    pretty(&SessionDoc {
        protocol: (&r.protocol).into(),
        trials: r.trials.iter().map(TrialDoc::from).collect(),
        improvements: r.improvements.iter().map(ImprovementDoc::from).collect(),
    })
}

pub fn parse_trial_report(text: &str) -> Result<TrialReport, IoError> {
    serde_json::from_str(text).map_err(|e| IoError::Parse(format!("trial report: {e}")))
}

pub fn parse_session_report(text: &str) -> Result<SessionReport, IoError> {
    serde_json::from_str(text).map_err(|e| IoError::Parse(format!("session report: {e}")))
}

#[derive(Serialize)]
struct EventLine<'a> {
    trial: u32,
    #[serde(flatten)]
    event: &'a Event,
}

/// All trial events as JSON lines, each tagged with its trial id.
pub fn event_log_jsonl(r: &SessionReport) -> String {
    let mut out = String::new();
    for t in &r.trials {
        for e in &t.events {
            out.push_str(&serde_json::to_string(&EventLine { trial: t.trial_id, event: e }).expect("event serializes"));
            out.push('\n');
        }
    }
    out
}

pub fn write_session_report(path: &Path, r: &SessionReport) -> Result<(), IoError> {
    crate::write_text(path, &session_report_json(r))
}

pub fn read_session_report(path: &Path) -> Result<SessionReport, IoError> {
    parse_session_report(&crate::read_text(path)?).map_err(|e| e.at(path))
}
