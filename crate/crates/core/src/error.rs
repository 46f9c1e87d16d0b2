use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The field has no sign change, so there is no zero level set to measure from.
    #[error("field has no interface (single sign everywhere)")]
    NoInterface,

    #[error("region collapsed{}: {detail}", iteration.map(|i| format!(" at iteration {i}")).unwrap_or_default())]
    RegionCollapse { iteration: Option<usize>, detail: String },

    #[error("convexity violation: {detail}")]
    ConvexityViolation { detail: String },

    #[error("unsupported bit depth in {path}: {detail}", path = path.display())]
    UnsupportedDepth { path: PathBuf, detail: String },

    #[error("I/O error on {path}: {source}", path = path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error on {path}: {source}", path = path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn collapse(iteration: Option<usize>, detail: impl Into<String>) -> Self {
        Error::RegionCollapse {
            iteration,
            detail: detail.into(),
        }
    }

    /// Attach an outer-iteration index to a region-collapse error that lacks one.
    pub fn at_iteration(self, index: usize) -> Self {
        match self {
            Error::RegionCollapse {
                iteration: None,
                detail,
            } => Error::RegionCollapse {
                iteration: Some(index),
                detail,
            },
            Error::NoInterface => Error::RegionCollapse {
                iteration: Some(index),
                detail: "interface vanished".into(),
            },
            other => other,
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::RegionCollapse { .. } | Error::NoInterface => 2,
            Error::ConvexityViolation { .. } => 3,
            Error::Io { .. } | Error::Image { .. } | Error::UnsupportedDepth { .. } => 4,
            Error::InvalidInput(_) | Error::InvalidParameter(_) | Error::Parse(_) => 5,
        }
    }
}
