use thiserror::Error;

/// Errors raised by the numerical kernels and drivers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LemError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("duplicate entry at ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("overflow while squaring the scaled exponential")]
    Overflow,

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix of order {n} exceeds the dense guard of {limit}; use sampled verification instead")]
    TooLarge { n: usize, limit: usize },

    #[error("subdomain interior of {interior} nodes is not larger than the buffer width {buffer}: subdomains would be the same size as their buffer regions")]
    BufferTooWide { interior: usize, buffer: usize },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("step size underflow at t = {t} (h = {h})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("missing result for subdomain {0}")]
    MissingSubdomain(usize),
}

pub type Result<T> = std::result::Result<T, LemError>;
