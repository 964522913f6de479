//! Crate-wide error type.
//!
//! Variants partition into the same failure classes the CLI reports through
//! exit codes: argument/usage, I/O, parse, numeric, and artifact format.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller passed an out-of-contract argument (bad probability, mixed
    /// sexes, too few observations, ...).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Input text could not be interpreted (malformed header, bad cell).
    #[error("parse error: {0}")]
    Parse(String),

    /// A numeric routine failed (non-convergence, rank deficiency, failed
    /// bracket).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Filesystem failure while reading or writing.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Model artifact is structurally invalid or has an unsupported version.
    #[error("format error: {0}")]
    Format(String),

    /// Model artifact failed its integrity check or is truncated.
    #[error("corrupt artifact: {0}")]
    Corruption(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
