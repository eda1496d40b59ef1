//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by parsing, validation, and the certificate pipeline.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A vector or polynomial did not match the ambient dimension.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// An argument was outside its documented domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A parse error with a 1-based source position.
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: u32,
        column: u32,
        message: String,
    },

    /// Work exceeded a configured limit (e.g. the expansion term cap).
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// An operation was called outside its contract.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// Unexpected internal failure.
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// Process exit code for the CLI: 1 for input/parse problems, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DimensionMismatch { .. }
            | Error::InvalidInput(_)
            | Error::Syntax { .. }
            | Error::ResourceLimit(_) => 1,
            Error::ContractViolation(_) | Error::Internal(_) => 2,
        }
    }

    pub(crate) fn syntax(line: u32, column: u32, message: impl Into<String>) -> Self {
        Error::Syntax {
            line,
            column,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
