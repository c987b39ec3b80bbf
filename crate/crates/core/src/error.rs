use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum YmError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("plane-wave mode cap {cap} exceeded ({needed} modes)")]
    ModeCapExceeded { cap: usize, needed: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{0} needs a time derivative that was not supplied")]
    MissingTimeDerivative(&'static str),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("group element is not unitary (defect {defect:.3e})")]
    NonUnitary { defect: f64 },

    #[error("iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("Picard iteration diverges, ratios {ratios:?}")]
    Divergence { ratios: Vec<f64> },

    #[error("non-finite values at t = {time}")]
    NumericalAbort { time: f64 },

    #[error("unknown estimate id {0}")]
    UnknownEstimate(u32),

    #[error("snapshot format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, YmError>;
