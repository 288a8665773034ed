use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid basis label {labels:?} for a {n_atoms}-atom register")]
    InvalidLabel { labels: Vec<u8>, n_atoms: usize },

    #[error("atom index {atom} out of range 1..={n_atoms}")]
    AtomOutOfRange { atom: usize, n_atoms: usize },

    #[error("level {0} is not a qutrit level (expected 0, 1 or 2)")]
    InvalidLevel(u8),

    #[error("time {t} outside the pulse window [0, {total}]")]
    TimeOutOfDomain { t: f64, total: f64 },

    #[error("invalid noise amplitude {0}: need 0 <= R < 1")]
    InvalidNoise(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("optimization failed: {0}")]
    OptimizationFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
