use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Input data does not have the expected shape (missing cycles, bad rows, ...).
    #[error("malformed input: {0}")]
    MalformedInput(String),

    /// A value is outside the modelled domain (unknown direction, category, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller-side precondition does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The input is numerically degenerate (all-zero signal, zero total weight, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The request cannot be satisfied by any output.
    #[error("unsatisfiable: {0}")]
    Unsatisfiable(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// Training data lacks a required outlier category.
    #[error("training data has no signals of category {0}")]
    MissingCategory(u8),

    #[error("model format version {found} is incompatible with supported version {supported}")]
    VersionMismatch { found: u32, supported: u32 },

    #[error("invalid model or data file: {0}")]
    Format(String),

    #[error("I/O error on {path}: {source}")]
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
}

pub type Result<T> = std::result::Result<T, Error>;
