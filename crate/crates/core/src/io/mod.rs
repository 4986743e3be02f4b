//! File interchange: ASCII PCD/PLY point clouds, plane-sample CSV, and the
//! JSON schemas used by the command-line tools.
//!
//! Text formats only: byte-identical output for identical input, and floats
//! written with shortest-exact formatting so a write/read round trip
//! reproduces every coordinate bit for bit.

mod config;
mod csv;
mod pcd;
mod ply;

pub use config::*;
pub use csv::{datasets_from_csv, read_plane_samples_csv, write_plane_samples_csv};
pub use pcd::{read_pcd, write_pcd};
pub use ply::{read_ply, write_overlay_ply, write_ply, write_region_debug_ply};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o error on {path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{path}: {reason}")]
    Format { path: String, reason: String },
    #[error("{path}: json error: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
}

impl IoError {
    pub(crate) fn file(path: &std::path::Path, source: std::io::Error) -> Self {
        IoError::File {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn parse(path: &std::path::Path, line: usize, reason: impl Into<String>) -> Self {
        IoError::Parse {
            path: path.display().to_string(),
            line,
            reason: reason.into(),
        }
    }

    pub(crate) fn format(path: &std::path::Path, reason: impl Into<String>) -> Self {
        IoError::Format {
            path: path.display().to_string(),
            reason: reason.into(),
        }
    }
}
