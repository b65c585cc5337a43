use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulator and its building blocks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0} is not a BPSK symbol (expected +1 or -1)")]
    InvalidSymbol(f64),

    #[error("{0} is not a bit (expected 0 or 1)")]
    InvalidBit(u8),

    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("invalid coding matrix: {0}")]
    InvalidCodingMatrix(String),

    #[error("calibration block is empty")]
    EmptyCalibration,

    #[error("no relay of the pair carries user {0}")]
    NoCarrier(usize),

    #[error("relay {relay} buffer is {state}")]
    Buffer { relay: usize, state: &'static str },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: malformed report row {row}: {reason}")]
    Report { path: PathBuf, row: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the configuration rather than the filesystem.
    pub fn is_config(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::Csv { .. } | Error::Report { .. })
    }
}
