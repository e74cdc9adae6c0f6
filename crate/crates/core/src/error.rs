use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid interval [{start},{end}]: start must not exceed end")]
    Interval { start: usize, end: usize },

    #[error("negative weight {0}")]
    NegativeWeight(f64),

    #[error("malformed formula: {0}")]
    Malformed(String),

    #[error("formula horizon {horizon} at time {time} exceeds signal of length {len}")]
    Horizon {
        horizon: usize,
        time: usize,
        len: usize,
    },

    #[error("invalid signal: {0}")]
    Signal(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("{path}: row {row}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("backward pass requires a soft-mode trace")]
    HardTrace,

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// True for failures of the environment (missing files, unreadable
    /// paths) rather than of the data or configuration.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
