use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: bad magic {found:?}, expected {expected:?}")]
    BadMagic {
        path: PathBuf,
        expected: [u8; 4],
        found: [u8; 4],
    },

    #[error("{path}: truncated payload, expected {expected} bytes but found {actual}")]
    Truncated {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, got {actual} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("label of length {label_len} needs at least {required} frames, got {frames}")]
    InfeasibleLabel {
        label_len: usize,
        frames: usize,
        required: usize,
    },

    #[error("label token {token} out of range [1, {vocab}]")]
    TokenOutOfRange { token: u32, vocab: usize },

    #[error("enumeration guard exceeded: {classes}^{frames} alignments is above {limit}")]
    GuardExceeded {
        classes: usize,
        frames: usize,
        limit: u64,
    },

    #[error("target length {target} exceeds sequence length {frames}")]
    TargetTooLong { target: usize, frames: usize },

    #[error("need at least {needed} frames, got {actual}")]
    TooShort { needed: usize, actual: usize },

    #[error("selection of {requested} pairs exceeds the {available} available")]
    TooManyPairs { requested: usize, available: usize },

    #[error("invalid span partition: {0}")]
    InvalidPartition(String),

    #[error("encoder hook changed chunk {chunk} length from {expected} to {actual}")]
    HookContract {
        chunk: usize,
        expected: usize,
        actual: usize,
    },

    #[error("training diverged at step {step}: loss is {loss}")]
    Diverged { step: usize, loss: f64 },

    #[error("json error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors rooted in file access or file contents.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::BadMagic { .. }
                | Error::Truncated { .. }
                | Error::Format { .. }
                | Error::Json { .. }
        )
    }

    /// True for failed numerical checks (divergence, non-finite data).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Diverged { .. } | Error::NonFinite { .. })
    }
}
