use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("x = {x} is above threshold: no normalizable ansatz exists (infinitely squeezed limit)")]
    AboveThreshold { x: f64 },

    #[error("no fixed point: 2*chi/N = {ratio} exceeds 1 (the spin norm bounds |Jx| <= N/2)")]
    NoFixedPoint { ratio: f64 },

    #[error("x = {x} is below threshold: the zero-energy curve only exists for x >= 1")]
    BelowThreshold { x: f64 },

    #[error("continuation failed at x = {x}: best overlap {overlap} < {min_overlap} (refine the grid or raise n_max)")]
    ContinuationFailure { x: f64, overlap: f64, min_overlap: f64 },

    #[error("step size underflow at t = {t} (h = {h})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("accuracy: {0}")]
    Accuracy(String),

    #[error("truncation too small: {reason}; need n_max >= {required_n_max}")]
    TruncationPrecondition { reason: String, required_n_max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("oracle refused: {0}")]
    OracleRefused(String),

    #[error("LAPACK routine {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
