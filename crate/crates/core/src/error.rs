use std::path::PathBuf;

use thiserror::Error;

use crate::pipeline::snapshot::SnapshotError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("model is not initialized; run a warm start first")]
    Uninitialized,

    #[error("sample set is empty")]
    EmptySampleSet,

    #[error("weighted least-squares system is singular ({0})")]
    DegenerateSubspace(String),

    #[error("stacked alignment system is rank deficient; use a more textured scene or a lower rank")]
    RankDeficient,

    #[error("degenerate affine transform (det = {det:.4})")]
    DegenerateTransform { det: f64 },

    #[error("alignment failed: {0}")]
    AlignmentFailure(String),

    #[error("batch of {found} frames is too small; need at least {needed}")]
    BatchTooSmall { needed: usize, found: usize },

    #[error("batch EM failed after {attempts} attempts: {reason}")]
    EmFailure { attempts: usize, reason: String },

    #[error("frame {index}: size {found:?} does not match model size {expected:?}")]
    FrameSizeMismatch {
        index: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error(transparent)]
    Snapshot(#[from] SnapshotError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        });
    }
    Ok(())
}
