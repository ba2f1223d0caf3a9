use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the registration library.
#[derive(Debug, Error)]
pub enum Error {
    /// A grid, pyramid or plane has the wrong shape.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// An index-like argument (level, reduction level, ...) is out of range.
    #[error("range error: {0}")]
    Range(String),

    /// A caller broke an operation's contract (wrong axis, non-power-of-two scale, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// The input carries no usable signal for the named stage.
    #[error("degenerate input in {stage}: {reason}")]
    Degenerate { stage: &'static str, reason: String },

    /// An image or scenario file could not be decoded.
    #[error("format error in {path:?} at byte {offset}: {reason}")]
    Format {
        path: PathBuf,
        offset: usize,
        reason: String,
    },

    #[error("i/o error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn degenerate(stage: &'static str, reason: impl Into<String>) -> Self {
        Error::Degenerate {
            stage,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the data itself rather than by how the tool was invoked.
    pub fn is_degenerate_input(&self) -> bool {
        matches!(
            self,
            Error::Degenerate { .. } | Error::Dimension(_) | Error::Range(_) | Error::Contract(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
