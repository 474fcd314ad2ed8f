//! Distance-transform error metrics, synthetic phantoms and a scripted user
//! that replays seed placement with jitter.

mod metrics;
mod phantom;
mod scripted;

pub use metrics::{
    contour_error, contour_error_sum, error_profile, mutual_error, pair_errors, repeatability,
    ErrorProfile, MetricsReport, PairError, RunResult, SliceSummary,
};
pub use phantom::{GroundTruth, Phantom, PhantomKind};
pub use scripted::{scripted_user, ScriptStrategy};
