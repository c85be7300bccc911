//! Error types shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A grid or collection index is out of range.
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    /// Malformed JSON or CSV input.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        message: String,
        line: usize,
        column: usize,
    },

    /// Structurally valid input with invalid content (unknown class label,
    /// degenerate polygon, out-of-range ratio, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// Ground truth and detections do not cover the same patches.
    #[error("dataset consistency error: {0}")]
    DatasetConsistency(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("unsupported format version {found:?} (this build reads version {supported:?})")]
    UnsupportedVersion { found: String, supported: String },

    /// Synthetic generation could not satisfy its placement constraints.
    #[error("generation failed: {0}")]
    Generation(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("image decode error: {0}")]
    ImageDecode(String),
}

impl Error {
    /// Wrap an I/O error with the path it occurred on.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad inputs rather than runtime failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::Parse { .. }
                | Error::Validation(_)
                | Error::UnsupportedVersion { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Parse {
            message: err.to_string(),
            line: err.line(),
            column: err.column(),
        }
    }
}
