//! Differential operators, line sampling for orthogonal cuts, and the
//! pre-filters with region-restricted application.

mod differential;
mod filters;
mod sampling;

pub use differential::{
    gradient_magnitude, laplacian, laplacian_zero_crossings, ScalarField, ZeroCrossingMask,
};
pub use filters::{apply_filter, FilterKind, FilterSpec, InfluenceRadius};
pub use sampling::{build_orthogonal_cut, cut_region, sample_line, CutLine};

use crate::geometry::round_half_up;

/// Re-quantizes a real intensity to 0..=255 with round-half-up.
#[inline]
pub fn quantize(v: f64) -> u8 {
    round_half_up(v).clamp(0.0, 255.0) as u8
}
