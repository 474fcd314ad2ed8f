use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::Pixel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("image too small: {width}x{height} (need at least 3x3)")]
    ImageTooSmall { width: usize, height: usize },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("pixel ({}, {}) is outside the {context}", .pixel.x, .pixel.y)]
    PixelOutside { pixel: Pixel, context: &'static str },

    #[error("point ({x:.2}, {y:.2}) is outside the image bounds")]
    PointOutOfBounds { x: f64, y: f64 },

    #[error("too few training samples: {got} (need at least {need})")]
    TooFewSamples { got: usize, need: usize },

    #[error("training sample has zero gradient everywhere")]
    ZeroGradientSample,

    #[error("target ({}, {}) has not been reached by the search", .0.x, .0.y)]
    NotFinalized(Pixel),

    #[error("engine state: {0}")]
    EngineState(&'static str),

    #[error("session closed")]
    SessionClosed,

    #[error("cut ordering violated at cut {cut}: {reason}")]
    CutOrdering { cut: usize, reason: String },

    #[error("topology violation on slice {slice}: expected 2 crossings, found {found}")]
    Topology { slice: usize, found: usize },

    #[error("seed ({}, {}) unreachable within the search strip on slice {slice}", .seed.x, .seed.y)]
    UnreachableSeed { slice: usize, seed: Pixel },

    #[error("correspondence failed on slice {slice}: {reason}")]
    Correspondence { slice: usize, reason: String },

    #[error("degenerate contour: {0}")]
    DegenerateContour(String),

    #[error("scripted user did not converge: {0}")]
    NonConvergence(String),

    #[error("job cancelled")]
    Cancelled,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    /// True for errors that describe invalid user input rather than I/O trouble.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::CutOrdering { .. }
                | Error::ImageTooSmall { .. }
                | Error::IndexOutOfRange { .. }
                | Error::PixelOutside { .. }
                | Error::PointOutOfBounds { .. }
                | Error::Topology { .. }
                | Error::UnreachableSeed { .. }
                | Error::Correspondence { .. }
                | Error::DegenerateContour(_)
                | Error::TooFewSamples { .. }
                | Error::ZeroGradientSample
                | Error::InvalidArgument(_)
                | Error::NonConvergence(_)
        )
    }
}
