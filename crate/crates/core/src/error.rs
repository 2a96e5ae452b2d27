use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("column {column} is the zero vector")]
    ZeroColumn { column: usize },

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("{path}: parse error at line {line}, field {field}: {token:?} is not a number")]
    Parse {
        path: PathBuf,
        line: usize,
        field: usize,
        token: String,
    },

    #[error("{path}: ragged input at line {line}: expected {expected} fields, found {found}")]
    Ragged {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("edge endpoint {index} out of range for {n} nodes")]
    EndpointOutOfRange { index: usize, n: usize },

    #[error("solver diverged at iteration {iteration}: non-finite {what}")]
    Diverged { iteration: usize, what: &'static str },

    #[error("label vectors have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("linear system (XᵀX + αI) is not positive definite")]
    NotPositiveDefinite,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
