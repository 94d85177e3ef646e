use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state bounds: {0}")]
    InvalidBounds(String),

    #[error("invalid neighborhood half-widths: {0}")]
    InvalidDelta(String),

    #[error("{name} must lie in (0, 1], got {value}")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("the covering grid has no active cells")]
    EmptyGrid,

    #[error("pop on an empty replay buffer")]
    BufferUnderflow,

    #[error("initial state {0:?} lies in the failure set")]
    InitialStateInFailureSet([f64; 3]),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("unknown model name `{0}`")]
    UnknownModel(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
