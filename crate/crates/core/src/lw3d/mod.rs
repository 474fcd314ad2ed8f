//! Volume segmentation from orthogonal cuts: seed derivation per slice,
//! distance-transform search strips and the slice-by-slice sweep.

mod cuts;
mod dt;
mod pipeline;

pub use cuts::{
    check_seed_order, cyclic_order, row_crossings, slice_columns, slice_seeds, strip_width,
    strip_width_from_columns, validate_cut_ordering, CutBoundary, CutSpec, CutsFile, SegmentSpec,
    StripParams, TopologySegment, DEFAULT_WIGGLE_RADIUS, SAFETY_RANGE,
};
pub use dt::{chamfer_dt, polyline_dt, strip_mask, DTField, AXIAL_STEP, DIAGONAL_STEP};
pub use pipeline::{
    segment_slice, segment_volume, segment_volume_with, ProgressFn, SegmentOptions, SliceReport,
    SweepHooks, VolumeSegmentation,
};
