use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{name} = {value} is out of range: {reason}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quantity is undefined: {0}")]
    Undefined(&'static str),

    #[error("iteration diverged after index {last_finite}")]
    Diverged { last_finite: usize },

    #[error("Lipschitz estimate doubled more than {limit} times")]
    TooManyDoublings { limit: u32 },
}

impl Error {
    pub(crate) fn out_of_range(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::OutOfRange {
            name,
            value,
            reason,
        }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
