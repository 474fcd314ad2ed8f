//! Interactive 2D live-wire: bucket-queue Dijkstra over the pixel graph,
//! path reconstruction, cooling, heating and boundary assembly.

mod boundary;
mod cooling;
mod queue;
mod search;
mod session;

pub use boundary::Boundary;
pub use cooling::{CoolingState, FrozenPrefix, DEFAULT_FREEZE_AFTER_MS};
pub use queue::BucketQueue;
pub use search::{compute_path_tree, path_cost, PathTree, Search, SearchContext, UNREACHED};
pub use session::{
    coalesce_targets, BoundaryEvent, Engine, EngineConfig, EngineRequest, EngineSession, ErrorCode,
    RequestKind, SessionOptions,
};
