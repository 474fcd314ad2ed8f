use crate::cost::{
    max_edge_cost, relax_cost, CostWeights, HeatOverlay, PathStats, StaticCostField,
};
use crate::engine::queue::BucketQueue;
use crate::error::{Error, Result};
use crate::geometry::{Dir8, Mask, Pixel};

pub const UNREACHED: u64 = u64::MAX;
const NO_DIR: u8 = 8;

/// Shortest-path tree rooted at a seed.
#[derive(Clone, Debug, PartialEq)]
pub struct PathTree {
    width: usize,
    height: usize,
    seed: Pixel,
    cum_cost: Vec<u64>,
    pred_dir: Vec<u8>,
    finalized: Vec<bool>,
    finalized_count: usize,
}

impl PathTree {
    fn new(width: usize, height: usize, seed: Pixel) -> Self {
        let n = width * height;
        PathTree {
            width,
            height,
            seed,
            cum_cost: vec![UNREACHED; n],
            pred_dir: vec![NO_DIR; n],
            finalized: vec![false; n],
            finalized_count: 0,
        }
    }

    pub fn seed(&self) -> Pixel {
        self.seed
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    fn index_of(&self, p: Pixel) -> Option<usize> {
        (p.x >= 0 && p.y >= 0 && (p.x as usize) < self.width && (p.y as usize) < self.height)
            .then(|| p.y as usize * self.width + p.x as usize)
    }

    /// Best known cumulative cost; `None` while unreached.
    pub fn cum_cost(&self, p: Pixel) -> Option<u64> {
        self.index_of(p)
            .map(|i| self.cum_cost[i])
            .filter(|&c| c != UNREACHED)
    }

    /// Direction of the last step into `p` on its best path.
    pub fn pred_dir(&self, p: Pixel) -> Option<Dir8> {
        self.index_of(p)
            .map(|i| self.pred_dir[i])
            .filter(|&d| d != NO_DIR)
            .map(|d| Dir8::from_index(d as usize))
    }

    pub fn predecessor(&self, p: Pixel) -> Option<Pixel> {
        self.pred_dir(p).map(|d| p.step(d.opposite()))
    }

    pub fn is_finalized(&self, p: Pixel) -> bool {
        self.index_of(p).is_some_and(|i| self.finalized[i])
    }

    pub fn finalized_count(&self) -> usize {
        self.finalized_count
    }

    /// Path from the seed to `target` along predecessor links.
    pub fn reconstruct(&self, target: Pixel) -> Result<Vec<Pixel>> {
        if !self.is_finalized(target) {
            return Err(Error::NotFinalized(target));
        }
        let mut path = vec![target];
        let mut p = target;
        while p != self.seed {
            p = self
                .predecessor(p)
                .expect("finalized nodes chain back to the seed");
            path.push(p);
            debug_assert!(path.len() <= self.width * self.height);
        }
        path.reverse();
        Ok(path)
    }
}

/// Everything a search reads besides its own state.
#[derive(Clone, Copy)]
pub struct SearchContext<'a> {
    pub field: &'a StaticCostField,
    pub weights: &'a CostWeights,
    pub heat: &'a HeatOverlay,
    pub mask: Option<&'a Mask>,
}

impl<'a> SearchContext<'a> {
    pub fn new(
        field: &'a StaticCostField,
        weights: &'a CostWeights,
        heat: &'a HeatOverlay,
    ) -> Self {
        SearchContext {
            field,
            weights,
            heat,
            mask: None,
        }
    }

    pub fn with_mask(mut self, mask: Option<&'a Mask>) -> Self {
        self.mask = mask;
        self
    }

    #[inline]
    fn allowed(&self, i: usize) -> bool {
        self.mask.is_none_or(|m| m.bits()[i])
    }
}

/// Resumable Dijkstra over the 8-connected pixel graph. Nodes are finalized
/// in cost order; the search can stop once a target is finalized and later
/// continue from where it left off.
#[derive(Clone, Debug)]
pub struct Search {
    tree: PathTree,
    queue: BucketQueue,
    stats: Vec<PathStats>,
}

impl Search {
    pub fn new(ctx: &SearchContext<'_>, seed: Pixel) -> Result<Self> {
        let field = ctx.field;
        if let Some(m) = ctx.mask {
            if m.width() != field.width() || m.height() != field.height() {
                return Err(Error::InvalidArgument(
                    "search mask and cost field differ in size".into(),
                ));
            }
        }
        if !field.contains(seed) {
            return Err(Error::PixelOutside {
                pixel: seed,
                context: "image",
            });
        }
        let si = field.index(seed);
        if !ctx.allowed(si) {
            return Err(Error::PixelOutside {
                pixel: seed,
                context: "search mask",
            });
        }
        let mut tree = PathTree::new(field.width(), field.height(), seed);
        tree.cum_cost[si] = 0;
        let mut queue = BucketQueue::new(max_edge_cost(ctx.weights, ctx.heat) as usize + 1);
        queue.push(0, si as u32);
        let stats = if ctx.weights.deviation > 0.0 {
            let mut s = vec![PathStats::default(); field.len()];
            s[si] = PathStats::default().push(field.features()[si] as f64);
            s
        } else {
            Vec::new()
        };
        Ok(Search { tree, queue, stats })
    }

    pub fn seed(&self) -> Pixel {
        self.tree.seed
    }

    pub fn tree(&self) -> &PathTree {
        &self.tree
    }

    pub fn into_tree(self) -> PathTree {
        self.tree
    }

    pub fn is_complete(&self) -> bool {
        self.queue.is_empty()
    }

    /// Finalizes the next node; `None` once the reachable region is exhausted.
    fn settle_one(&mut self, ctx: &SearchContext<'_>) -> Option<usize> {
        let field = ctx.field;
        let (w, h) = (field.width() as i32, field.height() as i32);
        let directional = ctx.weights.direction > 0.0;
        loop {
            let (key, item) = self.queue.pop()?;
            let u = item as usize;
            if self.tree.finalized[u] || key != self.tree.cum_cost[u] {
                continue;
            }
            self.tree.finalized[u] = true;
            self.tree.finalized_count += 1;
            let up = field.pixel(u);
            let dir_in = if directional {
                Some(self.tree.pred_dir[u])
                    .filter(|&d| d != NO_DIR)
                    .map(|d| Dir8::from_index(d as usize))
            } else {
                None
            };
            let stats_u = self.stats.get(u).copied();
            for dir in Dir8::ALL {
                let (dx, dy) = dir.offset();
                let (vx, vy) = (up.x + dx, up.y + dy);
                if vx < 0 || vy < 0 || vx >= w || vy >= h {
                    continue;
                }
                let v = vy as usize * field.width() + vx as usize;
                if self.tree.finalized[v] || !ctx.allowed(v) {
                    continue;
                }
                let (c, next_stats) = relax_cost(
                    field,
                    v,
                    dir,
                    dir_in,
                    stats_u.as_ref(),
                    ctx.heat,
                    ctx.weights,
                );
                let cand = key + c as u64;
                if cand < self.tree.cum_cost[v] {
                    self.tree.cum_cost[v] = cand;
                    self.tree.pred_dir[v] = dir.index() as u8;
                    if let Some(s) = next_stats {
                        self.stats[v] = s;
                    }
                    self.queue.push(cand, v as u32);
                }
            }
            return Some(u);
        }
    }

    /// Expands until `target` is finalized. Returns false when `target` is
    /// unreachable (outside the image, outside the mask, or cut off).
    pub fn expand_until(&mut self, ctx: &SearchContext<'_>, target: Pixel) -> bool {
        let Some(t) = self.tree.index_of(target) else {
            return false;
        };
        while !self.tree.finalized[t] {
            if self.settle_one(ctx).is_none() {
                return false;
            }
        }
        true
    }

    /// Finalizes up to `budget` more nodes; returns how many were finalized.
    pub fn expand(&mut self, ctx: &SearchContext<'_>, budget: usize) -> usize {
        let mut n = 0;
        while n < budget && self.settle_one(ctx).is_some() {
            n += 1;
        }
        n
    }

    pub fn run_to_completion(&mut self, ctx: &SearchContext<'_>) {
        while self.settle_one(ctx).is_some() {}
    }
}

/// Single-source shortest paths from `seed`, optionally restricted to `mask`
/// and optionally stopping as soon as `stop_at` is finalized.
pub fn compute_path_tree(
    ctx: &SearchContext<'_>,
    seed: Pixel,
    stop_at: Option<Pixel>,
) -> Result<PathTree> {
    let mut search = Search::new(ctx, seed)?;
    match stop_at {
        Some(t) => {
            search.expand_until(ctx, t);
        }
        None => search.run_to_completion(ctx),
    }
    Ok(search.into_tree())
}

/// Sum of edge costs along a path, recomputed step by step with the same
/// direction and deviation bookkeeping the search uses.
pub fn path_cost(ctx: &SearchContext<'_>, path: &[Pixel]) -> Result<u64> {
    let field = ctx.field;
    let Some(&first) = path.first() else {
        return Ok(0);
    };
    if !field.contains(first) {
        return Err(Error::PixelOutside {
            pixel: first,
            context: "image",
        });
    }
    let mut stats = (ctx.weights.deviation > 0.0)
        .then(|| PathStats::default().push(field.feature(first) as f64));
    let mut dir_in = None;
    let mut total = 0u64;
    for w in path.windows(2) {
        let dir = w[0].dir_to(w[1]).ok_or_else(|| {
            Error::InvalidArgument(format!("{:?} -> {:?} is not a single step", w[0], w[1]))
        })?;
        if !field.contains(w[1]) {
            return Err(Error::PixelOutside {
                pixel: w[1],
                context: "image",
            });
        }
        let d_in = if ctx.weights.direction > 0.0 {
            dir_in
        } else {
            None
        };
        let (c, next) = relax_cost(
            field,
            field.index(w[1]),
            dir,
            d_in,
            stats.as_ref(),
            ctx.heat,
            ctx.weights,
        );
        total += c as u64;
        stats = next;
        dir_in = Some(dir);
    }
    Ok(total)
}
