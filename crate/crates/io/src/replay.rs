//! Session recordings: one JSON record per line, globally time-ordered.
//!
//! ```text
//! {"type":"imu","id":0,"seq":12,"t_us":120000,"gyro":[..],"accel":[..],"buttons":0,"jaw":0.0}
//! {"type":"blobs","t_us":116667,"left":[[301.2,240.5]],"right":[[268.0,240.4]]}
//! {"type":"frame","t_us":116667,"left":"frames/000007_l.pgm","right":"frames/000007_r.pgm"}
//! {"type":"input","t_us":120000,"controller":"left","pose":{"p":[..],"q":[..]},"button":false,"jaw":0.0}
//! ```
//!
//! `imu`, `blobs` and `frame` records go through the tracking pipeline;
//! `input` records are already-fused controller samples (as sent by the
//! trainer UI) and reach the engine unchanged. Frame paths are relative to
//! the recording's directory.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use dextrain_core::task::ControllerInput;
use dextrain_core::Micros;
use serde::{Deserialize, Serialize};

use crate::packet::ControllerPacket;
use crate::IoError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ReplayRecord {
    Imu(ControllerPacket),
    Blobs(BlobRecord),
    Frame(FrameRecord),
    Input(ControllerInput),
}

/// Pre-extracted blob centroids `(u, v)` for one stereo frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobRecord {
    pub t_us: Micros,
    pub left: Vec<[f64; 2]>,
    pub right: Vec<[f64; 2]>,
}

/// A stereo pair stored as two PGM files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub t_us: Micros,
    pub left: String,
    pub right: String,
}

impl ReplayRecord {
    pub fn t_us(&self) -> Micros {
        match self {
            ReplayRecord::Imu(p) => p.t_us,
            ReplayRecord::Blobs(b) => b.t_us,
            ReplayRecord::Frame(f) => f.t_us,
            ReplayRecord::Input(i) => i.t_us,
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

/// Parses a recording; blank lines are skipped.
pub fn parse_replay(text: &str) -> Result<Vec<ReplayRecord>, IoError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        push_line(&mut out, i + 1, line)?;
    }
    Ok(out)
}

pub fn read_replay(path: &Path) -> Result<Vec<ReplayRecord>, IoError> {
    let file = std::fs::File::open(path).map_err(|e| IoError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| IoError::io(path, e))?;
        push_line(&mut out, i + 1, &line).map_err(|e| e.at(path))?;
    }
    Ok(out)
}

fn push_line(out: &mut Vec<ReplayRecord>, line_no: usize, line: &str) -> Result<(), IoError> {
    if line.trim().is_empty() {
        return Ok(());
    }
    let rec: ReplayRecord =
        serde_json::from_str(line).map_err(|e| IoError::Parse(format!("line {line_no}: {e}")))?;
    if let Some(prev) = out.last() {
        if rec.t_us() < prev.t_us() {
            return Err(IoError::Invalid(format!(
                "line {line_no}: t_us {} precedes the previous record's {}",
                rec.t_us(),
                prev.t_us()
            )));
        }
    }
    out.push(rec);
    Ok(())
}

pub fn write_replay(path: &Path, records: &[ReplayRecord]) -> Result<(), IoError> {
    let file = std::fs::File::create(path).map_err(|e| IoError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        writeln!(w, "{}", r.to_line()).map_err(|e| IoError::io(path, e))?;
    }
    w.flush().map_err(|e| IoError::io(path, e))
}

/// Stable time sort; records sharing a timestamp keep their order.
pub fn sort_records(records: &mut [ReplayRecord]) {
    records.sort_by_key(ReplayRecord::t_us);
}
