//! Live-wire boundary tracing on 2D slices and its extension to volumes
//! through orthogonal cuts, with mesh reconstruction and evaluation tools.

// NaN inputs are rejected with negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::should_implement_trait)]

pub mod cost;
pub mod engine;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod image_ops;
pub mod lw3d;
pub mod mesh;
pub mod volume;

pub use error::{Error, Result};
pub use geometry::{Dir8, Mask, Pixel, Point2};
pub use volume::{ContourSet, Image, SliceContour, Volume};
