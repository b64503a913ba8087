use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// The vertices do not span an n-dimensional affine subspace.
    #[error("degenerate simplex: {0}")]
    DegenerateSimplex(String),

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    /// Empirical covariance is not positive definite.
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("sample exhausted: requested points [{start}, {end}) but only {available} exist")]
    SampleExhausted { start: u64, end: u64, available: u64 },

    #[error("empty sample")]
    EmptySample,

    #[error("point {row} is outside the support: {reason}")]
    OutsideSupport { row: usize, reason: String },

    #[error("vertex finder failed after {restarts} restarts: update collapsed to zero")]
    RestartsExhausted { restarts: usize },

    #[error("containment precondition failed: {0}")]
    Containment(String),

    #[error("no run has enough neighbours within {threshold} (needed {needed}, best {best})")]
    BoostFailure { threshold: f64, needed: usize, best: usize },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
