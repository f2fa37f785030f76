//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced across the library.
///
/// Variants are grouped by how a caller should react: `Format`, `Length` and
/// `Io` indicate bad input data, `NonConvergence` indicates a numerical
/// failure, and the rest are contract violations at API boundaries.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Tensor extents do not line up for the requested operation.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An input violates a stated shape requirement (rank, power-of-two, ...).
    #[error("shape error: {0}")]
    Shape(String),

    /// A scalar input is outside its admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A patch grid does not divide the image it is applied to.
    #[error("layout error: {0}")]
    Layout(String),

    /// Malformed file contents (bad magic, bad header, bad payload).
    #[error("format error: {0}")]
    Format(String),

    /// A stream or buffer ended before the declared payload was read.
    #[error("length error: {0}")]
    Length(String),

    /// A qubit or site index is out of range.
    #[error("index error: {0}")]
    Index(String),

    /// A documented precondition was violated (e.g. non-orthonormal columns).
    #[error("precondition error: {0}")]
    Precondition(String),

    /// A result would exceed a configured size cap.
    #[error("size error: {0}")]
    Size(String),

    /// An iterative numerical routine failed to converge.
    #[error("numerical error: {0} (after {1} iterations)")]
    NonConvergence(String, usize),

    /// I/O failure, annotated with the path being accessed.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code category used by the CLI: 2 usage, 3 data/format,
    /// 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Format(_) | Error::Length(_) | Error::Io { .. } => 3,
            Error::NonConvergence(..) => 4,
            _ => 2,
        }
    }
}
