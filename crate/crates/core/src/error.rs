//! Error type shared by every module.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
#[non_exhaustive]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in input")]
    NonFinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("input outside the source ball: {0}")]
    OutsideSource(String),

    #[error("operation unsupported: {0}")]
    Unsupported(String),

    #[error("supports of the two distributions differ")]
    MismatchedSupport,

    #[error("stream exhausted after {0} queries")]
    Exhausted(usize),

    #[error("construction failed after {0} attempts")]
    ConstructionFailed(usize),

    #[error("linear program infeasible")]
    Infeasible,
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
