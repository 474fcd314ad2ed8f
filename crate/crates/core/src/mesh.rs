//! Surface reconstruction from a stack of closed slice contours: equal-arc
//! resampling, similarity normalization, windowed correspondence and band
//! triangulation, with Wavefront OBJ export.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{signed_area, Pixel, Point2};
use crate::volume::ContourSet;

pub const DEFAULT_SAMPLES: usize = 64;

/// Default correspondence window as a fraction of the circumference (two
/// sample spacings, at most half the circumference).
pub fn default_arc_window_frac(samples: usize) -> f64 {
    (2.0 / samples as f64).min(0.5)
}

/// A closed polyline parametrized by arc length from its first vertex.
#[derive(Clone, Debug)]
struct ArcPolyline {
    pts: Vec<Point2>,
    cum: Vec<f64>,
}

impl ArcPolyline {
    fn new(points: &[Point2]) -> Result<Self> {
        let mut pts: Vec<Point2> = Vec::with_capacity(points.len());
        for &p in points {
            if pts.last() != Some(&p) {
                pts.push(p);
            }
        }
        while pts.len() > 1 && pts.first() == pts.last() {
            pts.pop();
        }
        if pts.len() < 3 {
            return Err(Error::DegenerateContour(format!(
                "{} distinct points, need 3",
                pts.len()
            )));
        }
        let n = pts.len();
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        for i in 0..n {
            let d = pts[i].dist(pts[(i + 1) % n]);
            cum.push(cum[i] + d);
        }
        if !(cum[n] > 0.0) {
            return Err(Error::DegenerateContour("zero length".into()));
        }
        Ok(ArcPolyline { pts, cum })
    }

    fn len(&self) -> f64 {
        self.cum[self.pts.len()]
    }

    fn segment(&self, k: usize) -> (Point2, Point2) {
        (self.pts[k], self.pts[(k + 1) % self.pts.len()])
    }

    fn point_at(&self, s: f64) -> Point2 {
        let l = self.len();
        let s = s.rem_euclid(l);
        let k = match self
            .cum
            .binary_search_by(|c| c.partial_cmp(&s).expect("finite"))
        {
            Ok(i) => i.min(self.pts.len() - 1),
            Err(i) => i - 1,
        };
        let (a, b) = self.segment(k);
        let seg = self.cum[k + 1] - self.cum[k];
        if seg == 0.0 {
            a
        } else {
            a.lerp(b, (s - self.cum[k]) / seg)
        }
    }

    /// Closest point to `q` with unrolled arc position in `[lo, hi]`
    /// (`hi - lo <= len`). Ties go to the smallest arc position.
    fn closest_in(&self, q: Point2, lo: f64, hi: f64) -> Option<(f64, f64)> {
        let l = self.len();
        let n = self.pts.len();
        let lap0 = (lo / l).floor() as i64;
        let mut best: Option<(f64, f64)> = None;
        for lap in lap0..=lap0 + 1 {
            let base = lap as f64 * l;
            for k in 0..n {
                let (s0, s1) = (base + self.cum[k], base + self.cum[k + 1]);
                let (a, b) = (s0.max(lo), s1.min(hi));
                if a > b || s1 == s0 {
                    continue;
                }
                let (p, r) = self.segment(k);
                let d = r.sub(p);
                let t =
                    (q.sub(p).dot(d) / d.dot(d)).clamp((a - s0) / (s1 - s0), (b - s0) / (s1 - s0));
                let s = s0 + t * (s1 - s0);
                let dist = p.lerp(r, t).dist(q);
                if best.is_none_or(|(bs, bd)| dist < bd - 1e-12 || (dist <= bd + 1e-12 && s < bs)) {
                    best = Some((s, dist));
                }
            }
        }
        best
    }

    /// Length-weighted centroid of the polyline edges.
    fn centroid(&self) -> Point2 {
        let n = self.pts.len();
        let mut acc = Point2::new(0.0, 0.0);
        for k in 0..n {
            let (a, b) = self.segment(k);
            acc = acc.add(a.lerp(b, 0.5).scale(a.dist(b)));
        }
        acc.scale(1.0 / self.len())
    }
}

fn to_points(contour: &[Pixel]) -> Vec<Point2> {
    contour.iter().map(|p| p.to_point()).collect()
}

/// Equal arc-length samples of a closed contour.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledContour {
    pub points: Vec<Point2>,
    pub circumference: f64,
}

impl SampledContour {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.circumference / self.points.len() as f64
    }

    fn centroid(&self) -> Result<Point2> {
        ArcPolyline::new(&self.points).map(|a| a.centroid())
    }
}

/// Index of the vertex with the largest convex turn; lowest index on ties.
pub fn convex_start_vertex(contour: &[Point2]) -> Result<usize> {
    let arc = ArcPolyline::new(contour)?;
    let pts = &arc.pts;
    let n = pts.len();
    let orient = if signed_area(pts) < 0.0 { -1.0 } else { 1.0 };
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 0..n {
        let a = pts[(i + n - 1) % n];
        let b = pts[i];
        let c = pts[(i + 1) % n];
        let (u, v) = (b.sub(a), c.sub(b));
        let turn = orient * u.cross(v).atan2(u.dot(v));
        if turn > best.1 + 1e-12 {
            best = (i, turn);
        }
    }
    let start = best.0;
    // map back to the caller's indexing
    Ok(contour
        .iter()
        .position(|&p| p == pts[start])
        .expect("vertex from input"))
}

/// `m` points at arc positions `i·L/m` starting from the most convex vertex.
pub fn resample(contour: &[Point2], m: usize) -> Result<SampledContour> {
    if m < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 samples, got {m}"
        )));
    }
    let start = convex_start_vertex(contour)?;
    let mut rotated = contour[start..].to_vec();
    rotated.extend_from_slice(&contour[..start]);
    let arc = ArcPolyline::new(&rotated)?;
    let l = arc.len();
    Ok(SampledContour {
        points: (0..m)
            .map(|i| arc.point_at(l * i as f64 / m as f64))
            .collect(),
        circumference: l,
    })
}

/// `p -> scale·p + translation`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Similarity {
    pub scale: f64,
    pub translation: Point2,
}

impl Similarity {
    pub const IDENTITY: Similarity = Similarity {
        scale: 1.0,
        translation: Point2::new(0.0, 0.0),
    };

    pub fn apply(&self, p: Point2) -> Point2 {
        p.scale(self.scale).add(self.translation)
    }

    pub fn inverse(&self) -> Similarity {
        Similarity {
            scale: 1.0 / self.scale,
            translation: self.translation.scale(-1.0 / self.scale),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Normalized {
    pub points: Vec<Point2>,
    pub transform: Similarity,
    pub inverse: Similarity,
}

/// Scales `next` about its centroid to the circumference of `prev` and moves
/// its centroid onto that of `prev`.
pub fn normalize_next(prev: &SampledContour, next: &[Point2]) -> Result<Normalized> {
    let arc = ArcPolyline::new(next)?;
    let scale = prev.circumference / arc.len();
    let c_next = arc.centroid();
    let c_prev = prev.centroid()?;
    let transform = Similarity {
        scale,
        translation: c_prev.sub(c_next.scale(scale)),
    };
    Ok(Normalized {
        points: next.iter().map(|&p| transform.apply(p)).collect(),
        transform,
        inverse: transform.inverse(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Correspondence {
    pub points: Vec<Point2>,
    /// Unrolled arc positions on the target, strictly increasing.
    pub arcs: Vec<f64>,
}

/// Matches every sample of `prev` to a point of the closed polyline
/// `next_t`: the first globally, each later one within `arc_window` ahead
/// of the previous match. Positions never fold back and wrap at most once.
pub fn correspond(
    prev: &SampledContour,
    next_t: &[Point2],
    arc_window: f64,
) -> Result<Correspondence> {
    let arc = ArcPolyline::new(next_t)?;
    let l = arc.len();
    if !(arc_window > 0.0 && arc_window <= l / 2.0 + 1e-9) {
        return Err(Error::InvalidArgument(format!(
            "arc window {arc_window} outside (0, {}]",
            l / 2.0
        )));
    }
    let step = 1e-9 * l;
    let (s0, _) = arc
        .closest_in(prev.points[0], 0.0, l)
        .expect("non-empty polyline");
    let mut arcs = vec![s0];
    let limit = s0 + l - step;
    for q in &prev.points[1..] {
        let last = *arcs.last().expect("non-empty");
        let (lo, hi) = (last + step, (last + arc_window).min(limit));
        if lo > hi {
            return Err(Error::Correspondence {
                slice: 0,
                reason: format!(
                    "window exhausted after {} of {} points",
                    arcs.len(),
                    prev.len()
                ),
            });
        }
        let (s, _) = arc
            .closest_in(*q, lo, hi)
            .ok_or_else(|| Error::Correspondence {
                slice: 0,
                reason: "empty search window".into(),
            })?;
        arcs.push(s);
    }
    Ok(Correspondence {
        points: arcs.iter().map(|&s| arc.point_at(s)).collect(),
        arcs,
    })
}

/// Two rings joined by `2m` triangles, local indices: ring 0 is `0..m`,
/// ring 1 is `m..2m`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

pub fn build_band(prev: &[Point2], next: &[Point2], z_prev: f64, z_next: f64) -> Result<BandMesh> {
    let m = prev.len();
    if next.len() != m || m < 3 {
        return Err(Error::InvalidArgument(format!(
            "band rings need equal size >= 3, got {m} and {}",
            next.len()
        )));
    }
    let vertices = prev
        .iter()
        .map(|p| [p.x, p.y, z_prev])
        .chain(next.iter().map(|p| [p.x, p.y, z_next]))
        .collect();
    Ok(BandMesh {
        vertices,
        triangles: band_triangles(m, 0, m),
    })
}

fn band_triangles(m: usize, top: usize, bottom: usize) -> Vec<[usize; 3]> {
    (0..m)
        .flat_map(|i| {
            let j = (i + 1) % m;
            [
                [top + i, top + j, bottom + i],
                [top + j, bottom + j, bottom + i],
            ]
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandInfo {
    pub segment: usize,
    pub slice_top: usize,
    pub slice_bottom: usize,
    pub first_triangle: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
    pub bands: Vec<BandInfo>,
    pub samples: usize,
    pub arc_window_frac: f64,
}

impl Mesh {
    /// Triangles whose area is below `eps`.
    pub fn degenerate_triangles(&self, eps: f64) -> usize {
        self.triangles
            .iter()
            .filter(|t| {
                let [a, b, c] = t.map(|i| self.vertices[i]);
                let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
                let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
                let n = [
                    u[1] * v[2] - u[2] * v[1],
                    u[2] * v[0] - u[0] * v[2],
                    u[0] * v[1] - u[1] * v[0],
                ];
                0.5 * (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt() < eps
            })
            .count()
    }

    pub fn to_obj(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# live-wire contour stack surface");
        let _ = writeln!(s, "# samples {}", self.samples);
        let _ = writeln!(s, "# arc_window {}", self.arc_window_frac);
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {} {}", v[0], v[1], v[2]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        s
    }

    pub fn save_obj(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_obj()).map_err(|e| Error::io(path, e))
    }
}

/// Meshes every segment of the contour stack. The top contour is resampled;
/// each following slice is normalized against the current ring, matched,
/// mapped back and becomes the next ring.
pub fn reconstruct(contours: &ContourSet, samples: usize, arc_window_frac: f64) -> Result<Mesh> {
    contours.validate()?;
    if !(arc_window_frac > 0.0 && arc_window_frac <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "arc window fraction {arc_window_frac} outside (0, 0.5]"
        )));
    }
    let mut mesh = Mesh {
        vertices: Vec::new(),
        triangles: Vec::new(),
        bands: Vec::new(),
        samples,
        arc_window_frac,
    };
    for (si, &[first, last]) in contours.segments.iter().enumerate() {
        let stack: Vec<_> = contours
            .slices
            .iter()
            .filter(|s| (first..=last).contains(&s.index))
            .collect();
        if stack.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "segment {} has {} contour(s), need at least 2",
                si + 1,
                stack.len()
            )));
        }
        let z = |k: usize| k as f64 * contours.spacing;
        let mut ring = resample(&to_points(&stack[0].contour), samples).map_err(|e| {
            Error::Correspondence {
                slice: stack[0].index,
                reason: e.to_string(),
            }
        })?;
        let mut top = mesh.vertices.len();
        mesh.vertices
            .extend(ring.points.iter().map(|p| [p.x, p.y, z(stack[0].index)]));
        for pair in stack.windows(2) {
            let slice = pair[1].index;
            let fail = |e: Error| match e {
                Error::Correspondence { reason, .. } => Error::Correspondence { slice, reason },
                other => Error::Correspondence {
                    slice,
                    reason: other.to_string(),
                },
            };
            let next = to_points(&pair[1].contour);
            let norm = normalize_next(&ring, &next).map_err(fail)?;
            let matched = correspond(&ring, &norm.points, arc_window_frac * ring.circumference)
                .map_err(fail)?;
            let points: Vec<Point2> = matched
                .points
                .iter()
                .map(|&p| norm.inverse.apply(p))
                .collect();
            let bottom = mesh.vertices.len();
            mesh.vertices
                .extend(points.iter().map(|p| [p.x, p.y, z(slice)]));
            mesh.bands.push(BandInfo {
                segment: si,
                slice_top: pair[0].index,
                slice_bottom: slice,
                first_triangle: mesh.triangles.len(),
            });
            mesh.triangles.extend(band_triangles(samples, top, bottom));
            let circumference = ArcPolyline::new(&next).map_err(fail)?.len();
            ring = SampledContour {
                points,
                circumference,
            };
            top = bottom;
        }
    }
    Ok(mesh)
}
