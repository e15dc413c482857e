use thiserror::Error;

/// Errors raised by the numerical kernels and experiments.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid stepper configuration: {0}")]
    InvalidConfig(String),

    #[error("field contains non-finite values")]
    NonFinite,

    #[error("positions are not strictly increasing at index {index}")]
    NonMonotone { index: usize },

    #[error("wave breaking: y_xi = {stretch:e} at particle {index}")]
    Breaking { index: usize, stretch: f64 },

    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("mismatched lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
