use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong between reading a CSV and writing a report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("target column {0:?} not found in header")]
    MissingColumn(String),
    #[error("row {row}, column {column:?}: empty cell")]
    EmptyCell { row: usize, column: String },
    #[error("row {row}, column {column:?}: cannot parse {value:?} as a finite number")]
    BadNumber {
        row: usize,
        column: String,
        value: String,
    },
    #[error("invalid dataset: {0}")]
    InvalidData(String),
    #[error("dimension mismatch: expected {expected} features, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid hyperparameter {name}: {reason}")]
    InvalidParam { name: String, reason: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("model file line {line}: {message}")]
    ModelFormat { line: usize, message: String },
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
