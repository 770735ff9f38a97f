use thiserror::Error;

/// Errors raised by the numerical layers of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("metric operator is not positive definite")]
    NotPositiveDefinite,

    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),

    #[error("derivative order {0} is not supported here")]
    UnsupportedOrder(usize),

    #[error("derivative of order {order} is unbounded at coordinate {index}")]
    SingularDerivative { order: usize, index: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
