use thiserror::Error;

/// Errors raised by the segmentation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AcevError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate neighborhood around point {center}: {size} point(s), need at least 2")]
    DegenerateNeighborhood { center: usize, size: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An internal invariant did not hold. Indicates a bug rather than bad input.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, AcevError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(AcevError::InvalidInput(msg.into()))
}
