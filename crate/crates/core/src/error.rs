use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("empty action set")]
    EmptyActionSet,

    #[error("index out of range: {what} = {index} (limit {limit})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("value iteration did not converge within {0} sweeps")]
    NoConvergence(usize),

    #[error("illegal move: {0}")]
    IllegalMove(String),

    #[error("seat {seat} cannot act in phase {phase}")]
    OutOfPhase { seat: usize, phase: String },

    #[error("replay buffer holds {have} transitions, batch needs {need}")]
    InsufficientSamples { have: usize, need: usize },

    #[error("unknown opponent id {0}")]
    UnknownOpponent(u64),

    #[error("checkpoint checksum mismatch")]
    Checksum,

    #[error("unsupported checkpoint version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),

    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
