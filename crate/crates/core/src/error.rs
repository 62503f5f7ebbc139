use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric: max |A[i,j] - A[j,i]| = {deviation:e} exceeds {tolerance:e}")]
    Asymmetric { deviation: f64, tolerance: f64 },

    #[error("lambda has length {found}, tuple has d = {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{routine} did not converge")]
    NonConvergence { routine: &'static str },

    #[error("grid point ({i}, {j}): {source}")]
    GridPoint {
        i: usize,
        j: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical kernels, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonConvergence { .. } => true,
            Error::GridPoint { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
