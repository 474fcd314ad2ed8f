use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rasterize_polyline, round_half_up, Pixel, Point2};
use crate::image_ops::{quantize, CutLine};
use crate::volume::{Image, Volume};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhantomKind {
    /// Disc of constant radius in every slice.
    Cylinder { radius: f64 },
    /// Disc whose radius shrinks linearly with the slice index.
    Cone { radius: f64, shrink_per_slice: f64 },
    /// Three vertical bands: a weak edge at column boundary `weak_edge` and a
    /// strong edge `gap` columns to its right with twice the step height.
    TwoEdgePlate { weak_edge: usize, gap: usize },
    /// Ellipsoid centred in the volume with the given semi-axes (x, y, z).
    Ellipsoid { radii: [f64; 3] },
}

/// Synthetic volume with an analytic boundary in every slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phantom {
    pub kind: PhantomKind,
    pub width: usize,
    pub height: usize,
    pub depth: usize,
    pub background: u8,
    /// Intensity difference between object and background. On the plate the
    /// weak step is a third of it and the strong step two thirds.
    pub contrast: u8,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// Analytic boundary of one slice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GroundTruth {
    Ellipse {
        center: Point2,
        rx: f64,
        ry: f64,
    },
    /// Vertical line `x = const` spanning the image height.
    VerticalLine {
        x: f64,
        height: usize,
    },
    Empty,
}

impl Phantom {
    pub fn cylinder(size: usize, depth: usize, radius: f64) -> Self {
        Phantom {
            kind: PhantomKind::Cylinder { radius },
            width: size,
            height: size,
            depth,
            background: 40,
            contrast: 120,
            noise_sigma: 0.0,
            seed: 0,
        }
    }

    pub fn cone(size: usize, depth: usize, radius: f64, shrink_per_slice: f64) -> Self {
        Phantom {
            kind: PhantomKind::Cone {
                radius,
                shrink_per_slice,
            },
            ..Self::cylinder(size, depth, radius)
        }
    }

    pub fn ellipsoid(size: usize, depth: usize, radii: [f64; 3]) -> Self {
        Phantom {
            kind: PhantomKind::Ellipsoid { radii },
            ..Self::cylinder(size, depth, radii[0])
        }
    }

    /// Plate with intensities 40 | 80 | 160 (weak step 40, strong step 80).
    pub fn two_edge_plate(width: usize, height: usize, weak_edge: usize) -> Self {
        Phantom {
            kind: PhantomKind::TwoEdgePlate { weak_edge, gap: 6 },
            width,
            height,
            depth: 1,
            background: 40,
            contrast: 120,
            noise_sigma: 0.0,
            seed: 0,
        }
    }

    pub fn with_noise(mut self, sigma: f64, seed: u64) -> Self {
        self.noise_sigma = sigma;
        self.seed = seed;
        self
    }

    fn center(&self) -> Point2 {
        Point2::new(
            (self.width as f64 - 1.0) / 2.0,
            (self.height as f64 - 1.0) / 2.0,
        )
    }

    pub fn ground_truth(&self, slice: usize) -> GroundTruth {
        let c = self.center();
        match self.kind {
            PhantomKind::Cylinder { radius } => GroundTruth::Ellipse {
                center: c,
                rx: radius,
                ry: radius,
            },
            PhantomKind::Cone {
                radius,
                shrink_per_slice,
            } => {
                let r = radius - shrink_per_slice * slice as f64;
                if r > 0.0 {
                    GroundTruth::Ellipse {
                        center: c,
                        rx: r,
                        ry: r,
                    }
                } else {
                    GroundTruth::Empty
                }
            }
            PhantomKind::Ellipsoid { radii } => {
                let cz = (self.depth as f64 - 1.0) / 2.0;
                let t = 1.0 - ((slice as f64 - cz) / radii[2]).powi(2);
                if t > 0.0 {
                    GroundTruth::Ellipse {
                        center: c,
                        rx: radii[0] * t.sqrt(),
                        ry: radii[1] * t.sqrt(),
                    }
                } else {
                    GroundTruth::Empty
                }
            }
            PhantomKind::TwoEdgePlate { weak_edge, .. } => GroundTruth::VerticalLine {
                x: weak_edge as f64 - 0.5,
                height: self.height,
            },
        }
    }

    /// The strong (interfering) edge of a plate phantom.
    pub fn strong_edge(&self) -> Option<GroundTruth> {
        match self.kind {
            PhantomKind::TwoEdgePlate { weak_edge, gap } => Some(GroundTruth::VerticalLine {
                x: (weak_edge + gap) as f64 - 0.5,
                height: self.height,
            }),
            _ => None,
        }
    }

    /// Boundary an ideal user would trace in the orthogonal cut along `cut`
    /// over slices `first..=last`: down one wall, across the last row, up the
    /// other wall. Columns are arc positions rounded to the nearest sample.
    pub fn cut_boundary(&self, cut: &CutLine, first: usize, last: usize) -> Result<Vec<Pixel>> {
        if first > last || last >= self.depth {
            return Err(Error::InvalidArgument(format!(
                "bad slice range {first}..={last}"
            )));
        }
        let mut left = Vec::new();
        let mut right = Vec::new();
        for z in first..=last {
            let [a, b] = self
                .ground_truth(z)
                .line_crossings(cut)
                .ok_or(Error::Topology { slice: z, found: 0 })?;
            left.push(Pixel::new(round_half_up(a) as i32, z as i32));
            right.push(Pixel::new(round_half_up(b) as i32, z as i32));
        }
        right.reverse();
        left.extend(right);
        Ok(rasterize_polyline(&left, false))
    }

    fn clean_value(&self, x: usize, y: usize, z: usize) -> f64 {
        let bg = self.background as f64;
        let fg = bg + self.contrast as f64;
        match (self.kind.clone(), self.ground_truth(z)) {
            (PhantomKind::TwoEdgePlate { weak_edge, gap }, _) => {
                let step = self.contrast as f64 / 3.0;
                if x < weak_edge {
                    bg
                } else if x < weak_edge + gap {
                    bg + step
                } else {
                    bg + 3.0 * step
                }
            }
            (_, GroundTruth::Ellipse { center, rx, ry }) => {
                let dx = (x as f64 - center.x) / rx;
                let dy = (y as f64 - center.y) / ry;
                if dx * dx + dy * dy <= 1.0 {
                    fg
                } else {
                    bg
                }
            }
            _ => bg,
        }
    }

    pub fn volume(&self) -> Result<Volume> {
        if self.width < 3 || self.height < 3 || self.depth == 0 {
            return Err(Error::InvalidArgument(
                "phantom needs at least 3x3x1 voxels".into(),
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidArgument("noise sigma must be >= 0".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let noise = Normal::new(0.0, self.noise_sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");
        let mut slices = Vec::with_capacity(self.depth);
        for z in 0..self.depth {
            slices.push(Image::from_fn(self.width, self.height, |x, y| {
                let v = self.clean_value(x, y, z);
                if self.noise_sigma > 0.0 {
                    quantize(v + noise.sample(&mut rng))
                } else {
                    quantize(v)
                }
            }));
        }
        Volume::from_slices(&slices)
    }
}

impl GroundTruth {
    /// Distance from `p` to the boundary (approximate for ellipses: exact
    /// for circles).
    pub fn distance(&self, p: Point2) -> f64 {
        match *self {
            GroundTruth::Ellipse { .. } => self.project(p).dist(p),
            GroundTruth::VerticalLine { x, .. } => (p.x - x).abs(),
            GroundTruth::Empty => f64::INFINITY,
        }
    }

    /// Closest boundary point to `p` (radial projection for ellipses).
    pub fn project(&self, p: Point2) -> Point2 {
        match *self {
            GroundTruth::Ellipse { center, rx, ry } => {
                let d = p.sub(center);
                let t = if d.norm() == 0.0 { 0.0 } else { d.y.atan2(d.x) };
                if (rx - ry).abs() < 1e-12 {
                    center.add(Point2::new(t.cos(), t.sin()).scale(rx))
                } else {
                    // radial intersection with the ellipse
                    let k = 1.0 / ((t.cos() / rx).powi(2) + (t.sin() / ry).powi(2)).sqrt();
                    center.add(Point2::new(t.cos(), t.sin()).scale(k))
                }
            }
            GroundTruth::VerticalLine { x, .. } => Point2::new(x, p.y),
            GroundTruth::Empty => p,
        }
    }

    /// Arc positions along `cut` where the line crosses the boundary, in
    /// increasing order.
    pub fn line_crossings(&self, cut: &CutLine) -> Option<[f64; 2]> {
        let GroundTruth::Ellipse { center, rx, ry } = *self else {
            return None;
        };
        let d = cut.direction();
        let o = cut.p0.sub(center);
        let (ax, ay) = (d.x / rx, d.y / ry);
        let (bx, by) = (o.x / rx, o.y / ry);
        let qa = ax * ax + ay * ay;
        let qb = 2.0 * (ax * bx + ay * by);
        let qc = bx * bx + by * by - 1.0;
        let disc = qb * qb - 4.0 * qa * qc;
        if disc <= 0.0 {
            return None;
        }
        let r = disc.sqrt();
        Some([(-qb - r) / (2.0 * qa), (-qb + r) / (2.0 * qa)])
    }

    /// Boundary point at angle `theta` (ellipses) or row `theta` (lines).
    pub fn point_at(&self, theta: f64) -> Point2 {
        match *self {
            GroundTruth::Ellipse { center, rx, ry } => {
                center.add(Point2::new(rx * theta.cos(), ry * theta.sin()))
            }
            GroundTruth::VerticalLine { x, .. } => Point2::new(x, theta),
            GroundTruth::Empty => Point2::new(0.0, 0.0),
        }
    }

    /// 8-connected rasterization of the boundary.
    pub fn rasterize(&self) -> Vec<Pixel> {
        match *self {
            GroundTruth::Ellipse { rx, ry, .. } => {
                let n = ((rx.max(ry)) * 16.0).ceil().max(16.0) as usize;
                let mut pts: Vec<Pixel> = Vec::with_capacity(n);
                for i in 0..n {
                    let q = self
                        .point_at(std::f64::consts::TAU * i as f64 / n as f64)
                        .to_pixel();
                    if pts.last() != Some(&q) {
                        pts.push(q);
                    }
                }
                while pts.len() > 1 && pts.first() == pts.last() {
                    pts.pop();
                }
                rasterize_polyline(&pts, true)
            }
            GroundTruth::VerticalLine { x, height } => {
                let col = (x + 0.5).floor() as i32;
                (0..height as i32).map(|y| Pixel::new(col, y)).collect()
            }
            GroundTruth::Empty => Vec::new(),
        }
    }
}
