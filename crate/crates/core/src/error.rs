use std::path::PathBuf;

use crate::ring::TensorShape;

/// Errors produced by the tensor algebra, the extractors and the data loaders.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("tensor shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch {
        expected: TensorShape,
        found: TensorShape,
    },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A value that should be real came back with a non-negligible imaginary
    /// part, or some other internal consistency check failed.
    #[error("numerical consistency error: {0}")]
    Numerical(String),

    #[error("SVD did not converge for frequency ({w1}, {w2})")]
    SvdFailure { w1: usize, w2: usize },

    #[error("data format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cube has a degenerate value range (min = max = {0})")]
    DegenerateRange(f64),

    #[error("kappa is undefined: chance agreement equals 1")]
    UndefinedKappa,

    #[error("empty input: {0}")]
    Empty(&'static str),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
