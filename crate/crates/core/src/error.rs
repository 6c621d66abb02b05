//! Crate-wide error type. Variants are grouped by what the caller can do
//! about them: bad input files, bad data shapes, and bad model files map to
//! distinct CLI exit codes downstream.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Header/column problems while ingesting a CSV.
    #[error("schema error: {0}")]
    Schema(String),

    /// A cell that cannot be parsed or validated, with its 1-based file line.
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },

    /// Structurally impossible data: empty sets, mismatched lengths, ragged rows.
    #[error("shape error: {0}")]
    Shape(String),

    /// A fit was asked to learn from rows containing a single class.
    #[error("single-class data: {0}")]
    SingleClass(String),

    /// Invalid parameter value for an operation.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Model state errors: predicting before fit, dimension mismatches.
    #[error("model error: {0}")]
    Model(String),

    /// Persisted model file cannot be used.
    #[error("model file error: {0}")]
    ModelFile(String),

    #[error("model file version {found} is not supported (expected {expected})")]
    ModelFileVersion { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
