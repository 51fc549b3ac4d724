use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("matrix is not numerically positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("column {0} has (near) zero norm")]
    DegenerateColumn(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("class {0} is already registered")]
    DuplicateClass(u32),

    #[error("accuracy grid is incomplete: {0}")]
    IncompleteGrid(String),

    #[error("metric undefined: {0}")]
    Undefined(String),

    #[error("bad magic in {path}: expected {expected:?}, found {found:?}")]
    BadMagic {
        path: PathBuf,
        expected: [u8; 4],
        found: [u8; 4],
    },

    #[error("truncated file {path}: expected {expected} bytes, found {found}")]
    TruncatedFile {
        path: PathBuf,
        expected: u64,
        found: u64,
    },

    #[error("non-finite value at index {index} in {path}")]
    NonFiniteValue { path: PathBuf, index: usize },

    #[error("cannot split {classes} classes with B-{initial} Inc-{increment}")]
    IndivisibleSplit {
        classes: usize,
        initial: usize,
        increment: usize,
    },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("line {line}: malformed value for `{key}`: {reason}")]
    MalformedValue {
        line: usize,
        key: String,
        reason: String,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        Error::Dimension {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
