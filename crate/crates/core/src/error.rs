use thiserror::Error;

/// Errors produced by the guarantee library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Text input could not be parsed; `position` is a 0-based byte offset.
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    /// An affine point left the probability simplex.
    #[error("point outside the simplex; largest admissible coefficient is {max_alpha}")]
    Range { max_alpha: String },

    /// A resource budget (profiles, scenarios, wall clock) was exhausted.
    #[error("resource limit reached: {0}")]
    Limit(String),

    /// An internal consistency check failed.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
