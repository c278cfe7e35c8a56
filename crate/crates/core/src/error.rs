use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("Nyquist violation: grid of {grid} points cannot resolve frequency {freq}")]
    NyquistViolation { grid: usize, freq: u64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// The characteristic matrix is singular or too badly conditioned at `k`.
    #[error("Resonance at k={k} (condition number {cond:e})")]
    Resonance { k: i64, cond: f64 },

    #[error("the finite-difference system is singular at mode k={mode}")]
    SingularSystem { mode: i64 },

    #[error("proof sequence evaluated at k=0")]
    ZeroFrequency,

    #[error("audit range K={0} is too small (need K >= 4)")]
    RangeTooSmall(u64),

    #[error("exponent r={0} outside (1, 2]")]
    InvalidExponent(f64),

    #[error("operator sequence has no entry at k={0}")]
    MissingFrequency(i64),

    #[error("dyadic partition with jmax={jmax} does not cover frequency {freq}")]
    PartitionTooShort { jmax: u32, freq: u64 },

    #[error("input function is zero")]
    ZeroInput,

    #[error("forcing frequency {freq} exceeds truncation K={modes}")]
    TruncationTooSmall { modes: u64, freq: u64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
