use thiserror::Error;

/// Errors surfaced by the optimizer, the benchmark registry, and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid bounds: {0}")]
    InvalidBounds(String),

    #[error("objective returned non-finite value {value} at x = {x:?}")]
    NonFiniteObjective { x: Vec<f64>, value: f64 },

    #[error("unsupported function/dimension pair ({name}, {dim}); supported: {supported}")]
    UnsupportedFunction {
        name: String,
        dim: usize,
        supported: String,
    },

    #[error("scale matrix is not positive definite (pivot {pivot} = {value})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("all importance log-weights are -inf or non-finite; the sample set is degenerate")]
    DegenerateWeights,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
