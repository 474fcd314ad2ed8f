//! Edge costs of the pixel graph.
//!
//! Two static per-pixel features (scaled, inverted gradient magnitude and
//! Laplacian zero crossings) are combined linearly into a base cost in
//! `[0, 255]`. A trained mapping may replace the gradient term. On top of the
//! static field, relaxation adds a path-dependent direction penalty and a
//! deviation penalty, scales diagonal steps by √2 and inflates heated pixels.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{round_half_up, Dir8, Mask, Pixel};
use crate::image_ops::{gradient_magnitude, laplacian_zero_crossings};
use crate::volume::Image;

pub const MAX_EDGE_COST: u32 = 65_535;
pub const MIN_TRAINING_SAMPLES: usize = 16;
/// Penalty per turn of 0°, 45°, 90°, 135° and 180°.
pub const DEFAULT_DIRECTION_TABLE: [f64; 5] = [0.0, 8.0, 24.0, 64.0, 128.0];
pub const HEAT_PER_LEVEL: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    /// Weight of the gradient feature (or of the trained mapping).
    pub gradient: f64,
    /// Weight of the Laplacian zero-crossing feature.
    pub laplacian: f64,
    /// Weight of the direction (curvature) penalty.
    pub direction: f64,
    /// Weight of the path deviation penalty.
    pub deviation: f64,
    pub use_training: bool,
    #[serde(default = "default_direction_table")]
    pub direction_table: [f64; 5],
}

fn default_direction_table() -> [f64; 5] {
    DEFAULT_DIRECTION_TABLE
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            gradient: 0.5,
            laplacian: 0.5,
            direction: 0.0,
            deviation: 0.0,
            use_training: false,
            direction_table: DEFAULT_DIRECTION_TABLE,
        }
    }
}

impl CostWeights {
    pub fn new(gradient: f64, laplacian: f64, direction: f64, deviation: f64) -> Result<Self> {
        let w = CostWeights {
            gradient,
            laplacian,
            direction,
            deviation,
            ..Default::default()
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.gradient,
            self.laplacian,
            self.direction,
            self.deviation,
        ];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "weights must be finite and >= 0: {all:?}"
            )));
        }
        if self.gradient + self.laplacian <= 0.0 {
            return Err(Error::InvalidArgument(
                "at least one base feature weight must be positive".into(),
            ));
        }
        if self.gradient > 0.0
            && self.laplacian > 0.0
            && (self.gradient + self.laplacian - 1.0).abs() > 1e-9
        {
            return Err(Error::InvalidArgument(format!(
                "base weights must sum to 1 when both are active (got {} + {})",
                self.gradient, self.laplacian
            )));
        }
        if self
            .direction_table
            .iter()
            .any(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(Error::InvalidArgument(
                "direction table entries must be >= 0".into(),
            ));
        }
        Ok(())
    }

    /// True when relaxation depends on how a pixel was reached.
    pub fn is_anisotropic(&self) -> bool {
        self.direction > 0.0 || self.deviation > 0.0
    }
}

/// `255 * (1 - grad / grad_max)`, rounded half-up.
pub fn gradient_feature(grad: f64, grad_max: f64) -> Result<u8> {
    if grad_max <= 0.0 {
        return Ok(255);
    }
    if !(0.0..=grad_max).contains(&grad) {
        return Err(Error::InvalidArgument(format!(
            "gradient {grad} outside [0, grad_max = {grad_max}]"
        )));
    }
    Ok(round_half_up(255.0 * (1.0 - grad / grad_max)) as u8)
}

/// Gradient magnitude scaled to `[0, 255]` (the bin used by training).
pub fn gradient_bin(grad: f64, grad_max: f64) -> u8 {
    if grad_max <= 0.0 {
        return 0;
    }
    round_half_up(255.0 * (grad / grad_max).clamp(0.0, 1.0)) as u8
}

/// 1 on a zero crossing, 255 elsewhere.
pub fn laplacian_feature(is_crossing: bool) -> u8 {
    if is_crossing {
        1
    } else {
        255
    }
}

/// Gradient-feature bin -> cost table learned from painted boundary pixels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainedMapping {
    table: [u8; 256],
}

impl TrainedMapping {
    pub fn from_table(table: [u8; 256]) -> Result<Self> {
        if !table.contains(&0) {
            return Err(Error::InvalidArgument(
                "trained mapping must contain a zero entry".into(),
            ));
        }
        Ok(TrainedMapping { table })
    }

    pub fn table(&self) -> &[u8; 256] {
        &self.table
    }

    #[inline]
    pub fn get(&self, bin: u8) -> u8 {
        self.table[bin as usize]
    }

    /// 256 lines of `bin value`.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(256 * 8);
        for (bin, v) in self.table.iter().enumerate() {
            let _ = writeln!(s, "{bin} {v}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut table = [0u8; 256];
        let mut seen = [false; 256];
        for (i, line) in text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
        {
            let loc = || format!("line {}", i + 1);
            let mut it = line.split_whitespace();
            let (Some(b), Some(v), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::parse(loc(), "expected `bin value`"));
            };
            let b: usize = b
                .parse()
                .map_err(|_| Error::parse(loc(), format!("bad bin `{b}`")))?;
            let v: u8 = v
                .parse()
                .map_err(|_| Error::parse(loc(), format!("bad value `{v}`")))?;
            if b > 255 || seen[b] {
                return Err(Error::parse(
                    loc(),
                    format!("bin {b} out of range or repeated"),
                ));
            }
            seen[b] = true;
            table[b] = v;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::parse(
                "end of file",
                "mapping must list all 256 bins",
            ));
        }
        TrainedMapping::from_table(table)
    }
}

/// Builds the mapping `|∇I|³ · frequency²` over gradient bins, normalized to
/// `[0, 255]`. Frequencies are smoothed with a 3-bin box blur first.
pub fn train_mapping(samples: &[u8]) -> Result<TrainedMapping> {
    if samples.len() < MIN_TRAINING_SAMPLES {
        return Err(Error::TooFewSamples {
            got: samples.len(),
            need: MIN_TRAINING_SAMPLES,
        });
    }
    if samples.iter().all(|&g| g == 0) {
        return Err(Error::ZeroGradientSample);
    }
    let mut hist = [0.0f64; 256];
    for &g in samples {
        hist[g as usize] += 1.0;
    }
    let smoothed: Vec<f64> = (0..256)
        .map(|g: usize| {
            let lo = g.saturating_sub(1);
            let hi = (g + 1).min(255);
            hist[lo..=hi].iter().sum::<f64>() / 3.0
        })
        .collect();
    let raw: Vec<f64> = smoothed
        .iter()
        .enumerate()
        .map(|(g, f)| (g as f64).powi(3) * f * f)
        .collect();
    let max = raw.iter().copied().fold(0.0, f64::max);
    let mut table = [0u8; 256];
    for (t, r) in table.iter_mut().zip(&raw) {
        *t = round_half_up(255.0 * r / max) as u8;
    }
    // bin 0 always has raw value 0, so the table always contains a zero
    TrainedMapping::from_table(table)
}

/// Immutable per-pixel base cost and gradient bin of one image.
#[derive(Clone, Debug, PartialEq)]
pub struct StaticCostField {
    width: usize,
    height: usize,
    cost: Vec<u8>,
    feature: Vec<u8>,
}

impl StaticCostField {
    /// Field with explicit costs; the gradient bin of every pixel is 0.
    pub fn from_costs(width: usize, height: usize, cost: Vec<u8>) -> Result<Self> {
        Self::from_parts(width, height, cost, vec![0; width * height])
    }

    pub fn from_parts(
        width: usize,
        height: usize,
        cost: Vec<u8>,
        feature: Vec<u8>,
    ) -> Result<Self> {
        if cost.len() != width * height
            || feature.len() != width * height
            || width == 0
            || height == 0
        {
            return Err(Error::InvalidArgument("cost field size mismatch".into()));
        }
        Ok(StaticCostField {
            width,
            height,
            cost,
            feature,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.cost.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cost.is_empty()
    }

    #[inline]
    pub fn contains(&self, p: Pixel) -> bool {
        p.x >= 0 && p.y >= 0 && (p.x as usize) < self.width && (p.y as usize) < self.height
    }

    #[inline]
    pub fn index(&self, p: Pixel) -> usize {
        p.y as usize * self.width + p.x as usize
    }

    #[inline]
    pub fn pixel(&self, i: usize) -> Pixel {
        Pixel::new((i % self.width) as i32, (i / self.width) as i32)
    }

    #[inline]
    pub fn cost(&self, p: Pixel) -> u8 {
        self.cost[self.index(p)]
    }

    #[inline]
    pub fn feature(&self, p: Pixel) -> u8 {
        self.feature[self.index(p)]
    }

    pub fn costs(&self) -> &[u8] {
        &self.cost
    }

    pub fn features(&self) -> &[u8] {
        &self.feature
    }

    /// The cost field as a grayscale image (dark = cheap).
    pub fn to_image(&self) -> Image {
        Image::new(self.width, self.height, self.cost.clone()).expect("same shape")
    }

    /// Gradient bins under the painted pixels, the input of [`train_mapping`].
    pub fn training_samples(&self, painted: &Mask) -> Vec<u8> {
        painted
            .pixels()
            .filter(|p| self.contains(*p))
            .map(|p| self.feature(p))
            .collect()
    }
}

/// Combines the image features into the static cost of every pixel.
///
/// Untrained: `round(w_G·f_G + w_L·f_L)`. Trained: the gradient term becomes
/// `255 - mapping[bin]` and the two active weights are renormalized to sum to 1.
pub fn static_cost(
    img: &Image,
    weights: &CostWeights,
    mapping: Option<&TrainedMapping>,
) -> Result<StaticCostField> {
    weights.validate()?;
    let mapping = match (weights.use_training, mapping) {
        (true, None) => {
            return Err(Error::InvalidArgument(
                "training enabled but no trained mapping supplied".into(),
            ));
        }
        (true, Some(m)) => Some(m),
        (false, _) => None,
    };
    let grad = gradient_magnitude(img)?;
    let crossings = laplacian_zero_crossings(img)?;
    let n = grad.values.len();
    let mut cost = Vec::with_capacity(n);
    let mut feature = Vec::with_capacity(n);
    let norm = weights.gradient + weights.laplacian;
    for i in 0..n {
        let g = grad.values[i];
        let bin = gradient_bin(g, grad.max_value);
        let f_l = laplacian_feature(crossings.flags[i]) as f64;
        let c = match mapping {
            None => {
                let f_g = gradient_feature(g, grad.max_value)? as f64;
                weights.gradient * f_g + weights.laplacian * f_l
            }
            Some(m) => {
                let trained = 255.0 - m.get(bin) as f64;
                (weights.gradient * trained + weights.laplacian * f_l) / norm
            }
        };
        cost.push(round_half_up(c).clamp(0.0, 255.0) as u8);
        feature.push(bin);
    }
    StaticCostField::from_parts(img.width(), img.height(), cost, feature)
}

/// `w_D · table[turn]` for the turn between the incoming and outgoing step.
pub fn direction_penalty(dir_in: Dir8, dir_out: Dir8, weight: f64, table: &[f64; 5]) -> f64 {
    weight * table[dir_in.turn_steps(dir_out)]
}

/// Running mean and sum of squared deviations of the gradient features
/// along a path.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PathStats {
    pub count: u32,
    pub mean: f64,
    pub m2: f64,
}

impl PathStats {
    pub fn variance(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.m2 / self.count as f64
        }
    }

    #[must_use]
    pub fn push(&self, value: f64) -> PathStats {
        let count = self.count + 1;
        let delta = value - self.mean;
        let mean = self.mean + delta / count as f64;
        PathStats {
            count,
            mean,
            m2: self.m2 + delta * (value - mean),
        }
    }
}

/// Penalty for a candidate feature value far from the path's running mean,
/// normalized by the path's standard deviation. Returns the penalty and the
/// statistics extended with the candidate.
pub fn deviation_penalty(stats: &PathStats, candidate: f64, weight: f64) -> (f64, PathStats) {
    let penalty = if stats.count < 2 {
        0.0
    } else {
        let z = 255.0 * (candidate - stats.mean).abs() / (stats.variance().sqrt() + 1.0);
        weight * z.min(255.0)
    };
    (penalty, stats.push(candidate))
}

/// Heat accumulated on the current wire.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HeatOverlay {
    pub level: u32,
    heated: Vec<bool>,
}

impl HeatOverlay {
    pub fn new() -> Self {
        Self::default()
    }

    /// Raises the level by one; the heated set becomes exactly `wire`.
    pub fn heat(&mut self, wire: &[Pixel], width: usize, height: usize) {
        self.heated.clear();
        self.heated.resize(width * height, false);
        self.level += 1;
        for p in wire {
            if p.x >= 0 && p.y >= 0 && (p.x as usize) < width && (p.y as usize) < height {
                self.heated[p.y as usize * width + p.x as usize] = true;
            }
        }
    }

    pub fn reset(&mut self) {
        self.level = 0;
        self.heated.clear();
    }

    #[inline]
    pub fn is_heated_index(&self, i: usize) -> bool {
        self.level > 0 && self.heated.get(i).copied().unwrap_or(false)
    }

    pub fn heated_count(&self) -> usize {
        self.heated.iter().filter(|&&h| h).count()
    }

    pub fn multiplier(&self) -> f64 {
        1.0 + HEAT_PER_LEVEL * self.level as f64
    }

    /// Inflated cost of a heated step: the larger of `cost * m` and the cost
    /// moved towards 255 by the fraction `1 - 1/m` of its remaining headroom.
    /// The second term lets near-zero costs on strong edges grow.
    #[inline]
    pub fn inflate(&self, cost: f64) -> f64 {
        let m = self.multiplier();
        (cost * m).max(255.0 - (255.0 - cost) / m)
    }
}

/// Cost of the step `from -> to` (`to` must be an 8-neighbour of `from`).
pub fn edge_cost(
    field: &StaticCostField,
    from: Pixel,
    to: Pixel,
    dir_in: Option<Dir8>,
    stats: Option<&PathStats>,
    heat: &HeatOverlay,
    weights: &CostWeights,
) -> Result<u32> {
    let dir = from.dir_to(to).ok_or_else(|| {
        Error::InvalidArgument(format!("{from:?} and {to:?} are not 8-neighbours"))
    })?;
    for p in [from, to] {
        if !field.contains(p) {
            return Err(Error::PixelOutside {
                pixel: p,
                context: "cost field",
            });
        }
    }
    Ok(relax_cost(field, field.index(to), dir, dir_in, stats, heat, weights).0)
}

/// Shared implementation of [`edge_cost`] for the search loop; also returns the
/// extended path statistics when `stats` is supplied.
#[inline]
pub(crate) fn relax_cost(
    field: &StaticCostField,
    to_index: usize,
    dir: Dir8,
    dir_in: Option<Dir8>,
    stats: Option<&PathStats>,
    heat: &HeatOverlay,
    weights: &CostWeights,
) -> (u32, Option<PathStats>) {
    let mut total = field.cost[to_index] as f64;
    if dir.is_diagonal() {
        total *= std::f64::consts::SQRT_2;
    }
    if let Some(d) = dir_in {
        total += direction_penalty(d, dir, weights.direction, &weights.direction_table);
    }
    let mut next = None;
    if let Some(s) = stats {
        let (pen, updated) =
            deviation_penalty(s, field.feature[to_index] as f64, weights.deviation);
        total += pen;
        next = Some(updated);
    }
    if heat.is_heated_index(to_index) {
        total = heat.inflate(total);
    }
    let cost = round_half_up(total).clamp(0.0, MAX_EDGE_COST as f64) as u32;
    (cost, next)
}

/// Upper bound on any edge cost under the given weights and heat level.
pub(crate) fn max_edge_cost(weights: &CostWeights, heat: &HeatOverlay) -> u32 {
    let table_max = weights.direction_table.iter().copied().fold(0.0, f64::max);
    let bound = (255.0 * std::f64::consts::SQRT_2
        + weights.direction * table_max
        + weights.deviation * 255.0)
        * heat.multiplier();
    (bound.ceil() as u32 + 1).min(MAX_EDGE_COST)
}
