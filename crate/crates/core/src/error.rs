//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by dataset handling, training, valuation, and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// A named column is missing from a file or schema roles overlap.
    #[error("schema error: {0}")]
    Schema(String),

    /// Input data or configuration violates a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),

    /// A cell failed to parse. `row` is 1-based over data rows.
    #[error("parse error in {path} at row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True when the error is caused by invalid user input (bad schema,
    /// bad config, unparseable cell) rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Schema(_) | Error::Validation(_) | Error::Parse { .. }
        )
    }

    /// Wrap the message with extra context, preserving the error class.
    pub fn with_context(self, context: &str) -> Error {
        match self {
            Error::Schema(m) => Error::Schema(format!("{context}: {m}")),
            Error::Validation(m) => Error::Validation(format!("{context}: {m}")),
            other => Error::Validation(format!("{context}: {other}")),
        }
    }
}
