//! File formats, replay and synthetic data for the dextrain engine.
//!
//! * [`packet`]: the 41-byte controller packet codec;
//! * [`replay`]: line-delimited JSON recordings of a session;
//! * [`calib`] and [`scene`]: TOML configuration files;
//! * [`report`]: canonical trial and session report documents;
//! * [`pipeline`]: replay records to engine inputs through tracking and
//!   orientation filtering;
//! * [`synth`]: seeded synthetic recordings with ground truth.

pub mod calib;
pub mod packet;
pub mod pgm;
pub mod pipeline;
pub mod replay;
pub mod report;
pub mod scene;
pub mod synth;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use calib::CalibrationFile;
pub use packet::{ControllerPacket, PacketError};
pub use pipeline::Pipeline;
pub use replay::ReplayRecord;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {message}")]
    InFile { path: PathBuf, message: String },
}

impl IoError {
    /// Attaches the offending file to a parse or validation error.
    pub fn at(self, path: &Path) -> IoError {
        match self {
            IoError::Parse(message) | IoError::Invalid(message) => IoError::InFile { path: path.to_path_buf(), message },
            other => other,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> IoError {
        IoError::Io { path: path.to_path_buf(), source }
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    std::fs::write(path, text).map_err(|e| IoError::io(path, e))
}
