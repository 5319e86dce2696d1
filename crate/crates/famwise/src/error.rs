//! Error type shared across the crate.
//!
//! Two broad classes:
//!
//! - [`Error::Validation`]: the caller handed us something malformed
//!   (out-of-range probability, mismatched lengths, missing margin, …).
//!   CLI maps these to exit code 2.
//! - [`Error::Computation`]: the inputs were well-formed but the numerics
//!   failed (non-PSD matrix, boundary search out of bracket, …).
//!   CLI maps these to exit code 3.

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed input: precondition violated by the caller.
    #[error("validation: {0}")]
    Validation(String),
    /// Numerical failure on well-formed input.
    #[error("computation: {0}")]
    Computation(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand constructor for validation errors.
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Shorthand constructor for computation errors.
    pub fn computation(msg: impl Into<String>) -> Self {
        Error::Computation(msg.into())
    }
}
