use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: wrong shapes, dimension mismatches, non-finite values.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The inputs are well formed but the operation's guarantee does not hold
    /// for them (too few samples, degree too large for the grid, ...).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The log-barrier term was evaluated at a grid point where `p_H <= 0`.
    #[error("barrier violation: p_H = {value:e} at grid point {index:?}")]
    BarrierViolation { index: [usize; 2], value: f64 },

    /// A polyphase Gram matrix is numerically singular.
    #[error("singular polyphase Gram matrix at grid point {index:?} (p_H = {value:e})")]
    SingularGram { index: [usize; 2], value: f64 },

    /// The optimizer could not make progress.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
