//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by simulation, analysis, and database operations.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented precondition or invariant.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The adaptive integrator could not advance past `t`.
    #[error("integration failed at t = {t} min: {reason}")]
    Integration { t: f64, reason: String },

    /// A closed-form result was requested for parameters it does not cover.
    #[error("unsupported parameters: {0}")]
    UnsupportedParams(String),

    /// A simulation inside a response analysis failed; `x` is the grid
    /// point (frequency or count) being evaluated.
    #[error("analysis failed at x = {x}: {source}")]
    Analysis {
        x: f64,
        #[source]
        source: Box<Error>,
    },

    /// A behavior database file could not be parsed.
    #[error("database parse error at line {line}: {reason}")]
    DbParse { line: usize, reason: String },

    /// A behavior database file carries an unknown schema version.
    #[error("database version mismatch: found {found:?}, expected {expected:?}")]
    DbVersion { found: String, expected: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
