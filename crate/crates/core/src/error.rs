use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    /// Bad magic, nonzero pad bits, or any other structural problem in a file.
    #[error("format error: {0}")]
    Format(String),

    /// Declared shape does not agree with the number of payload bytes.
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },

    /// Non-finite value at (row, col).
    #[error("non-finite value at ({row},{col})")]
    NonFinite { row: usize, col: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("domain error at line {line}: {message}")]
    Domain { line: usize, message: String },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("index {index} out of bounds for length {len}")]
    Bounds { index: usize, len: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    /// A per-row failure, wrapped with the row it came from.
    #[error("row {row}: {source}")]
    Row {
        row: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn dimension(context: &'static str, expected: usize, found: usize) -> Self {
        Error::Dimension {
            context,
            expected,
            found,
        }
    }

    /// True for errors caused by how the caller configured a run rather than by
    /// the data it was run on.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
