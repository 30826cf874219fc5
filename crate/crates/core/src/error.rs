use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("spin quantum number must be a positive half-integer, got {0}")]
    InvalidSpin(f64),

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("mean spin vector vanishes; no direction on the sphere")]
    ZeroMeanVector,

    #[error("negative probability {0:e}")]
    NegativeProbability(f64),

    #[error("record depth must be between 1 and {max}, got {depth}")]
    InvalidDepth { depth: usize, max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("failed to write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
