use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::metrics::RunResult;
use super::phantom::{GroundTruth, Phantom};
use crate::cost::{static_cost, CostWeights, HeatOverlay, StaticCostField, TrainedMapping};
use crate::engine::{compute_path_tree, SearchContext};
use crate::error::{Error, Result};
use crate::geometry::{Pixel, Point2};
use crate::volume::{ContourSet, SliceContour};

/// How the simulated operator places seeds on one phantom slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptStrategy {
    pub slice: usize,
    /// Intended seeds, evenly spaced along the true boundary.
    pub seeds: usize,
    /// Standard deviation of the placement jitter in pixels.
    pub jitter_sigma: f64,
    /// Largest accepted distance of a wire pixel from the true boundary.
    pub tolerance: f64,
    /// Total seeds allowed, corrections included.
    pub seed_budget: usize,
}

impl Default for ScriptStrategy {
    fn default() -> Self {
        ScriptStrategy {
            slice: 0,
            seeds: 4,
            jitter_sigma: 0.0,
            tolerance: 1.5,
            seed_budget: 64,
        }
    }
}

fn clamp_pixel(p: Pixel, w: usize, h: usize) -> Pixel {
    Pixel::new(p.x.clamp(0, w as i32 - 1), p.y.clamp(0, h as i32 - 1))
}

fn trace(
    field: &StaticCostField,
    weights: &CostWeights,
    from: Pixel,
    to: Pixel,
) -> Result<Vec<Pixel>> {
    let heat = HeatOverlay::new();
    let ctx = SearchContext::new(field, weights, &heat);
    compute_path_tree(&ctx, from, Some(to))?.reconstruct(to)
}

/// Simulated operator: places jittered seeds on the analytic boundary,
/// traces the live-wire between them and adds a corrective seed at the
/// worst pixel of any segment that strays beyond the tolerance.
/// Deterministic for a given `rng_seed`.
pub fn scripted_user(
    phantom: &Phantom,
    strategy: &ScriptStrategy,
    weights: &CostWeights,
    mapping: Option<&TrainedMapping>,
    rng_seed: u64,
) -> Result<RunResult> {
    if strategy.seeds < 2 || strategy.seed_budget < strategy.seeds {
        return Err(Error::InvalidArgument(
            "need at least 2 seeds within the budget".into(),
        ));
    }
    if !(strategy.jitter_sigma >= 0.0 && strategy.tolerance > 0.0) {
        return Err(Error::InvalidArgument(
            "jitter must be >= 0 and tolerance > 0".into(),
        ));
    }
    let started = Instant::now();
    let volume = phantom.volume()?;
    let (w, h) = (volume.width(), volume.height());
    let field = static_cost(&volume.slice_of(strategy.slice)?, weights, mapping)?;
    let truth = phantom.ground_truth(strategy.slice);
    let closed = match truth {
        GroundTruth::Ellipse { .. } => true,
        GroundTruth::VerticalLine { .. } => false,
        GroundTruth::Empty => {
            return Err(Error::InvalidArgument(format!(
                "phantom has no boundary on slice {}",
                strategy.slice
            )));
        }
    };

    let n = strategy.seeds;
    let intended: Vec<Point2> = (0..n)
        .map(|i| {
            if closed {
                truth.point_at(std::f64::consts::TAU * i as f64 / n as f64)
            } else {
                truth.point_at((h - 1) as f64 * i as f64 / (n - 1) as f64)
            }
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let jitter =
        Normal::new(0.0, strategy.jitter_sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");
    let mut seeds: Vec<Pixel> = intended
        .iter()
        .map(|p| {
            let q = if strategy.jitter_sigma > 0.0 {
                Point2::new(p.x + jitter.sample(&mut rng), p.y + jitter.sample(&mut rng))
            } else {
                *p
            };
            clamp_pixel(q.to_pixel(), w, h)
        })
        .collect();
    seeds.dedup();
    if closed {
        seeds.push(seeds[0]);
    }

    let mut contour: Vec<Pixel> = Vec::new();
    let mut corrections = 0;
    let mut i = 0;
    while i + 1 < seeds.len() {
        let (a, b) = (seeds[i], seeds[i + 1]);
        let path = if a == b {
            vec![a]
        } else {
            trace(&field, weights, a, b)?
        };
        let worst = path
            .iter()
            .map(|p| (truth.distance(p.to_point()), *p))
            .fold(
                (0.0, a),
                |best, cur| if cur.0 > best.0 { cur } else { best },
            );
        let fix = clamp_pixel(truth.project(worst.1.to_point()).to_pixel(), w, h);
        if worst.0 > strategy.tolerance && fix != a && fix != b {
            if seeds.len() - usize::from(closed) >= strategy.seed_budget {
                return Err(Error::NonConvergence(format!(
                    "seed budget of {} exhausted with {corrections} corrections",
                    strategy.seed_budget
                )));
            }
            seeds.insert(i + 1, fix);
            corrections += 1;
            continue;
        }
        let skip = usize::from(!contour.is_empty());
        contour.extend_from_slice(&path[skip.min(path.len())..]);
        i += 1;
    }
    if closed && contour.len() > 1 && contour.first() == contour.last() {
        contour.pop();
    }

    Ok(RunResult {
        id: format!("scripted-{rng_seed}"),
        contours: ContourSet {
            spacing: volume.spacing,
            segments: vec![[strategy.slice, strategy.slice]],
            slices: vec![SliceContour {
                index: strategy.slice,
                contour,
            }],
        },
        slice_times_ms: vec![started.elapsed().as_secs_f64() * 1000.0],
        seed_count: seeds.len() - usize::from(closed),
        auto_corrections: corrections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_circle_needs_no_corrections() {
        let ph = Phantom::cylinder(48, 1, 14.0);
        let r = scripted_user(
            &ph,
            &ScriptStrategy::default(),
            &CostWeights::default(),
            None,
            1,
        )
        .unwrap();
        assert_eq!(r.auto_corrections, 0);
        assert_eq!(r.seed_count, 4);
        let c = r.contours.contour(0).unwrap();
        assert!(c.windows(2).all(|p| p[0].is_8_adjacent(p[1])));
        assert!(c.last().unwrap().is_8_adjacent(c[0]));
    }

    #[test]
    fn plate_pulls_the_wire_away() {
        let ph = Phantom::two_edge_plate(40, 48, 15);
        let s = ScriptStrategy {
            seeds: 2,
            ..ScriptStrategy::default()
        };
        let r = scripted_user(&ph, &s, &CostWeights::default(), None, 1).unwrap();
        assert!(r.auto_corrections > 0);
    }

    #[test]
    fn reproducible_with_jitter() {
        let ph = Phantom::cylinder(48, 1, 14.0).with_noise(4.0, 3);
        let s = ScriptStrategy {
            jitter_sigma: 1.5,
            ..ScriptStrategy::default()
        };
        let a = scripted_user(&ph, &s, &CostWeights::default(), None, 9).unwrap();
        let b = scripted_user(&ph, &s, &CostWeights::default(), None, 9).unwrap();
        assert_eq!(a.contours, b.contours);
        assert_eq!(a.auto_corrections, b.auto_corrections);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let ph = Phantom::two_edge_plate(40, 48, 15);
        let s = ScriptStrategy {
            seeds: 2,
            seed_budget: 2,
            ..ScriptStrategy::default()
        };
        assert!(matches!(
            scripted_user(&ph, &s, &CostWeights::default(), None, 1),
            Err(Error::NonConvergence(_))
        ));
    }
}
