use thiserror::Error;

/// Errors raised by the engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A configured size cap would be exceeded.
    #[error("resource error: {0}")]
    Resource(String),
    /// The Hurst index is outside the regime an operation requires.
    #[error("regime violation: {0}")]
    Regime(String),
    /// Malformed textual input.
    #[error("parse error at offset {offset}: {message} (expected one of: {})", expected.join(", "))]
    Parse {
        offset: usize,
        message: String,
        expected: Vec<String>,
    },
    /// A convergence driver did not meet its stopping rule.
    #[error("no convergence: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
