use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain violation: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("ELBO decreased by {decrease:e} at iteration {iteration} (slot {slot})")]
    ElboDecrease {
        iteration: usize,
        slot: usize,
        decrease: f64,
    },

    #[error("instance too large: {size} labelings exceeds the limit of {limit}")]
    TooLarge { size: u128, limit: u128 },

    #[error("no candidate has a finite score")]
    NoFiniteScore,
}
