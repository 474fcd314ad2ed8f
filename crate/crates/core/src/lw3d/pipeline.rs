use std::sync::atomic::{AtomicBool, Ordering};

use super::cuts::{
    cyclic_order, slice_seeds, strip_width, validate_cut_ordering, StripParams, TopologySegment,
};
use super::dt::{polyline_dt, strip_mask};
use crate::cost::{static_cost, CostWeights, HeatOverlay, StaticCostField, TrainedMapping};
use crate::engine::{compute_path_tree, Boundary, SearchContext};
use crate::error::{Error, Result};
use crate::geometry::{Mask, Pixel};
use crate::volume::{ContourSet, SliceContour, Volume};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentOptions {
    pub strip: StripParams,
    pub wiggle_radius: usize,
    /// Restrict searches after a segment's first slice to the strip around
    /// the previous contour.
    pub use_strip: bool,
    /// Grow every path tree over the whole reachable region instead of
    /// stopping at the next seed.
    pub exhaustive: bool,
}

impl Default for SegmentOptions {
    fn default() -> Self {
        SegmentOptions {
            strip: StripParams::default(),
            wiggle_radius: super::cuts::DEFAULT_WIGGLE_RADIUS,
            use_strip: true,
            exhaustive: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SliceReport {
    pub slice: usize,
    pub segment: usize,
    pub seeds: Vec<Pixel>,
    /// Strip width used on this slice, `None` for an unrestricted search.
    pub strip_width: Option<usize>,
    pub search_area: usize,
    /// Nodes finalized summed over all seed-to-seed searches.
    pub finalized_nodes: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VolumeSegmentation {
    pub contours: ContourSet,
    pub reports: Vec<SliceReport>,
}

pub type ProgressFn<'a> = dyn FnMut(usize, usize, &SliceReport) + 'a;

/// Progress and cancellation for a sweep. `progress` gets
/// `(slices done, slices total, report)` after every slice.
#[derive(Default)]
pub struct SweepHooks<'a> {
    pub progress: Option<&'a mut ProgressFn<'a>>,
    pub cancel: Option<&'a AtomicBool>,
}

/// Traces a closed boundary through `seeds` in order. Returns the contour
/// and the number of finalized nodes.
pub fn segment_slice(
    field: &StaticCostField,
    weights: &CostWeights,
    seeds: &[Pixel],
    mask: Option<&Mask>,
    exhaustive: bool,
    slice: usize,
) -> Result<(Vec<Pixel>, usize)> {
    let mut seeds = seeds.to_vec();
    seeds.dedup();
    while seeds.len() > 1 && seeds.first() == seeds.last() {
        seeds.pop();
    }
    if seeds.len() < 2 {
        return Err(Error::DegenerateContour(format!(
            "slice {slice}: seeds collapse to one pixel"
        )));
    }
    let heat = HeatOverlay::new();
    let ctx = SearchContext::new(field, weights, &heat).with_mask(mask);
    let mut boundary = Boundary::new();
    let mut finalized = 0;
    for (i, &from) in seeds.iter().enumerate() {
        let to = seeds[(i + 1) % seeds.len()];
        let tree = compute_path_tree(&ctx, from, (!exhaustive).then_some(to))?;
        finalized += tree.finalized_count();
        if !tree.is_finalized(to) {
            return Err(Error::UnreachableSeed { slice, seed: to });
        }
        boundary.push(tree.reconstruct(to)?)?;
    }
    boundary.close()?;
    Ok((boundary.contour(), finalized))
}

pub fn segment_volume(
    v: &Volume,
    segments: &[TopologySegment],
    weights: &CostWeights,
    mapping: Option<&TrainedMapping>,
    opts: &SegmentOptions,
) -> Result<VolumeSegmentation> {
    segment_volume_with(v, segments, weights, mapping, opts, SweepHooks::default())
}

/// Sweeps every segment slice by slice. Each slice connects the cut seeds
/// in cyclic order; slices after a segment's first search only within the
/// distance strip of the previous contour (seeds always included).
pub fn segment_volume_with(
    v: &Volume,
    segments: &[TopologySegment],
    weights: &CostWeights,
    mapping: Option<&TrainedMapping>,
    opts: &SegmentOptions,
    mut hooks: SweepHooks<'_>,
) -> Result<VolumeSegmentation> {
    weights.validate()?;
    let mut widths = Vec::with_capacity(segments.len());
    for (i, seg) in segments.iter().enumerate() {
        if seg.last_slice >= v.depth() {
            return Err(Error::IndexOutOfRange {
                index: seg.last_slice,
                len: v.depth(),
            });
        }
        if i > 0 && seg.first_slice <= segments[i - 1].last_slice {
            return Err(Error::InvalidArgument(format!(
                "segment {} overlaps the previous one",
                i + 1
            )));
        }
        validate_cut_ordering(seg, opts.wiggle_radius)?;
        let multi = seg.last_slice > seg.first_slice;
        widths.push(if opts.use_strip && multi {
            Some(strip_width(seg, opts.strip, opts.wiggle_radius)?)
        } else {
            None
        });
    }

    let total: usize = segments
        .iter()
        .map(|s| s.last_slice - s.first_slice + 1)
        .sum();
    let (w, h) = (v.width(), v.height());
    let mut contours = ContourSet {
        spacing: v.spacing,
        segments: segments
            .iter()
            .map(|s| [s.first_slice, s.last_slice])
            .collect(),
        slices: Vec::with_capacity(total),
    };
    let mut reports = Vec::with_capacity(total);

    for (si, seg) in segments.iter().enumerate() {
        let mut previous: Option<Vec<Pixel>> = None;
        for z in seg.slices() {
            if hooks.cancel.is_some_and(|c| c.load(Ordering::Relaxed)) {
                return Err(Error::Cancelled);
            }
            let mut points = Vec::with_capacity(seg.cuts.len());
            for cb in &seg.cuts {
                points.push(slice_seeds(cb, z, opts.wiggle_radius)?);
            }
            let seeds: Vec<Pixel> = cyclic_order(&points).iter().map(|p| p.to_pixel()).collect();
            if let Some(&p) = seeds
                .iter()
                .find(|p| p.x < 0 || p.y < 0 || p.x >= w as i32 || p.y >= h as i32)
            {
                return Err(Error::PixelOutside {
                    pixel: p,
                    context: "slice",
                });
            }
            let strip = match (&previous, widths[si]) {
                (Some(prev), Some(width)) => {
                    let dt = polyline_dt(prev, w, h)?;
                    let mut m = strip_mask(&dt, width)?;
                    for &s in &seeds {
                        m.set(s, true);
                    }
                    Some((m, width))
                }
                _ => None,
            };
            let field = static_cost(&v.slice_of(z)?, weights, mapping)?;
            let mask = strip.as_ref().map(|(m, _)| m);
            let (contour, finalized) =
                segment_slice(&field, weights, &seeds, mask, opts.exhaustive, z)?;
            let report = SliceReport {
                slice: z,
                segment: si,
                seeds,
                strip_width: strip.as_ref().map(|(_, wd)| *wd),
                search_area: mask.map_or(w * h, Mask::count),
                finalized_nodes: finalized,
            };
            if let Some(cb) = hooks.progress.as_mut() {
                cb(reports.len() + 1, total, &report);
            }
            reports.push(report);
            contours.slices.push(SliceContour {
                index: z,
                contour: contour.clone(),
            });
            previous = Some(contour);
        }
    }
    Ok(VolumeSegmentation { contours, reports })
}
