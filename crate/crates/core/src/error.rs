use thiserror::Error;

/// Errors raised by the attack toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} out of bounds: {detail}")]
    OutOfBounds { what: &'static str, detail: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("target policy is globally worst: minimum gap {gap} at h={h}, cell={cell}")]
    TargetPolicyWorst { gap: f64, h: usize, cell: usize },

    #[error("invariant violated ({invariant}): {detail}")]
    Invariant {
        invariant: &'static str,
        detail: String,
    },

    #[error("malformed {what}: {detail}")]
    Parse { what: &'static str, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
