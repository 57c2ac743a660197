use thiserror::Error;

/// Errors raised by the numerical engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Caller supplied malformed or inconsistent input.
    #[error("input error: {0}")]
    Input(String),

    /// Vector lengths do not agree with the outcome space.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    /// A combinatorial or memory cap was exceeded.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// A computation produced a non-finite value.
    #[error("numeric error: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
