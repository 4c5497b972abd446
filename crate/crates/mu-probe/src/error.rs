use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum MuError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A block of the partitioned vectors is numerically degenerate
    /// (vanishing inner product or norm). The power iterations treat this
    /// as a signal to restart from a fresh initial condition.
    #[error("degenerate block {index}: {reason}")]
    DegenerateBlock { index: usize, reason: String },

    /// The plant response to the current excitation is numerically zero.
    #[error("zero gain: plant response vanished")]
    ZeroGain,

    /// The whole spectral signal lost its energy; the run must restart.
    #[error("zero signal energy")]
    ZeroSignal,

    #[error("linear algebra error: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, MuError>;
