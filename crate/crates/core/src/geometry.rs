//! Pixel coordinates, compass directions, masks and the small amount of planar
//! geometry shared by the rest of the crate.

use serde::{Deserialize, Serialize};

/// Rounds half-way cases towards positive infinity.
#[inline]
pub fn round_half_up(v: f64) -> f64 {
    (v + 0.5).floor()
}

/// An integer pixel position; x grows rightward, y downward.
///
/// Serialized as a two-element array `[x, y]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct Pixel {
    pub x: i32,
    pub y: i32,
}

impl Pixel {
    pub const fn new(x: i32, y: i32) -> Self {
        Pixel { x, y }
    }

    pub fn step(self, dir: Dir8) -> Pixel {
        let (dx, dy) = dir.offset();
        Pixel::new(self.x + dx, self.y + dy)
    }

    /// Direction of the single 8-neighbour step from `self` to `other`.
    pub fn dir_to(self, other: Pixel) -> Option<Dir8> {
        Dir8::from_offset(other.x - self.x, other.y - self.y)
    }

    pub fn is_8_adjacent(self, other: Pixel) -> bool {
        self.dir_to(other).is_some()
    }

    pub fn to_point(self) -> Point2 {
        Point2::new(self.x as f64, self.y as f64)
    }

    pub fn chebyshev(self, other: Pixel) -> i32 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }
}

impl From<[i32; 2]> for Pixel {
    fn from(v: [i32; 2]) -> Self {
        Pixel::new(v[0], v[1])
    }
}

impl From<Pixel> for [i32; 2] {
    fn from(p: Pixel) -> Self {
        [p.x, p.y]
    }
}

/// One of the eight compass steps of the pixel graph, clockwise from east
/// (screen orientation, y down).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dir8 {
    E = 0,
    SE = 1,
    S = 2,
    SW = 3,
    W = 4,
    NW = 5,
    N = 6,
    NE = 7,
}

impl Dir8 {
    pub const ALL: [Dir8; 8] = [
        Dir8::E,
        Dir8::SE,
        Dir8::S,
        Dir8::SW,
        Dir8::W,
        Dir8::NW,
        Dir8::N,
        Dir8::NE,
    ];

    const OFFSETS: [(i32, i32); 8] = [
        (1, 0),
        (1, 1),
        (0, 1),
        (-1, 1),
        (-1, 0),
        (-1, -1),
        (0, -1),
        (1, -1),
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn from_index(i: usize) -> Dir8 {
        Self::ALL[i & 7]
    }

    #[inline]
    pub fn offset(self) -> (i32, i32) {
        Self::OFFSETS[self.index()]
    }

    pub fn from_offset(dx: i32, dy: i32) -> Option<Dir8> {
        Self::OFFSETS
            .iter()
            .position(|&o| o == (dx, dy))
            .map(Dir8::from_index)
    }

    #[inline]
    pub fn is_diagonal(self) -> bool {
        self.index() % 2 == 1
    }

    pub fn opposite(self) -> Dir8 {
        Dir8::from_index(self.index() + 4)
    }

    /// Turn between two headings in 45° steps, 0 (straight) to 4 (reversal).
    pub fn turn_steps(self, other: Dir8) -> usize {
        let d = (self.index() as i32 - other.index() as i32).unsigned_abs() as usize;
        d.min(8 - d)
    }
}

/// A real-valued planar point in pixel units.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }

    pub fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }

    pub fn scale(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        self.sub(o).norm()
    }

    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        Point2::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }

    /// Nearest pixel, rounding half-way coordinates up.
    pub fn to_pixel(self) -> Pixel {
        Pixel::new(round_half_up(self.x) as i32, round_half_up(self.y) as i32)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(v: [f64; 2]) -> Self {
        Point2::new(v[0], v[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

/// A boolean per-pixel mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Mask {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Mask {
            width,
            height,
            bits: vec![true; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), width * height, "mask size mismatch");
        Mask {
            width,
            height,
            bits,
        }
    }

    pub fn from_pixels(
        width: usize,
        height: usize,
        pixels: impl IntoIterator<Item = Pixel>,
    ) -> Self {
        let mut m = Mask::new(width, height);
        for p in pixels {
            m.set(p, true);
        }
        m
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn contains(&self, p: Pixel) -> bool {
        p.x >= 0 && p.y >= 0 && (p.x as usize) < self.width && (p.y as usize) < self.height
    }

    #[inline]
    pub fn get(&self, p: Pixel) -> bool {
        self.contains(p) && self.bits[p.y as usize * self.width + p.x as usize]
    }

    /// Sets `p` when it lies inside the mask bounds; out-of-bounds pixels are ignored.
    pub fn set(&mut self, p: Pixel, v: bool) {
        if self.contains(p) {
            self.bits[p.y as usize * self.width + p.x as usize] = v;
        }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| Pixel::new((i % self.width) as i32, (i / self.width) as i32))
    }

    pub fn union_with(&mut self, other: &Mask) {
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
    }

    pub fn is_superset_of(&self, other: &Mask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| a || !b)
    }

    /// Square (Chebyshev) dilation by `r` pixels.
    pub fn dilate(&self, r: usize) -> Mask {
        if r == 0 {
            return self.clone();
        }
        let (w, h) = (self.width, self.height);
        // separable: rows then columns
        let mut rows = vec![false; w * h];
        for y in 0..h {
            for x in 0..w {
                if self.bits[y * w + x] {
                    let lo = x.saturating_sub(r);
                    let hi = (x + r).min(w - 1);
                    rows[y * w + lo..=y * w + hi].fill(true);
                }
            }
        }
        let mut out = vec![false; w * h];
        for x in 0..w {
            for y in 0..h {
                if rows[y * w + x] {
                    let lo = y.saturating_sub(r);
                    let hi = (y + r).min(h - 1);
                    for yy in lo..=hi {
                        out[yy * w + x] = true;
                    }
                }
            }
        }
        Mask::from_bits(w, h, out)
    }

    /// Inclusive bounding box `(x0, y0, x1, y1)` of the set pixels.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bb: Option<(usize, usize, usize, usize)> = None;
        for (i, _) in self.bits.iter().enumerate().filter(|(_, &b)| b) {
            let (x, y) = (i % self.width, i / self.width);
            bb = Some(match bb {
                None => (x, y, x, y),
                Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
            });
        }
        bb
    }
}

/// Pixels of the 8-connected digital segment from `a` to `b`, both ends included.
pub fn line_pixels(a: Pixel, b: Pixel) -> Vec<Pixel> {
    let n = a.chebyshev(b);
    if n == 0 {
        return vec![a];
    }
    let (fa, fb) = (a.to_point(), b.to_point());
    let mut out = Vec::with_capacity(n as usize + 1);
    for i in 0..=n {
        let p = fa.lerp(fb, i as f64 / n as f64).to_pixel();
        if out.last() != Some(&p) {
            out.push(p);
        }
    }
    out
}

/// Rasterizes a polyline so that consecutive output pixels are 8-adjacent.
/// When `closed`, the last vertex is joined back to the first.
pub fn rasterize_polyline(points: &[Pixel], closed: bool) -> Vec<Pixel> {
    let mut out: Vec<Pixel> = Vec::new();
    if points.is_empty() {
        return out;
    }
    let n = points.len();
    let edges = if closed { n } else { n - 1 };
    out.push(points[0]);
    for i in 0..edges {
        let (a, b) = (points[i], points[(i + 1) % n]);
        for p in line_pixels(a, b).into_iter().skip(1) {
            if out.last() != Some(&p) {
                out.push(p);
            }
        }
    }
    if closed && out.len() > 1 && out.last() == out.first() {
        out.pop();
    }
    if out.is_empty() {
        out.push(points[0]);
    }
    out
}

/// Signed area of a closed polygon (positive when counter-clockwise in a y-up frame).
pub fn signed_area(poly: &[Point2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    (0..n)
        .map(|i| poly[i].cross(poly[(i + 1) % n]))
        .sum::<f64>()
        * 0.5
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    b.sub(a).cross(c.sub(a))
}

fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    p.x >= a.x.min(b.x) - 1e-12
        && p.x <= a.x.max(b.x) + 1e-12
        && p.y >= a.y.min(b.y) - 1e-12
        && p.y <= a.y.max(b.y) + 1e-12
}

/// Closed-segment intersection test including touching and collinear overlap.
pub fn segments_intersect(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// True when no two non-adjacent edges of the closed polygon intersect.
pub fn is_simple_polygon(poly: &[Point2]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_half_up_rounds_ties_upward() {
        assert_eq!(round_half_up(127.5), 128.0);
        assert_eq!(round_half_up(177.5), 178.0);
        assert_eq!(round_half_up(2.49), 2.0);
        assert_eq!(round_half_up(-0.5), 0.0);
    }

    #[test]
    fn dir_turns() {
        assert_eq!(Dir8::E.turn_steps(Dir8::E), 0);
        assert_eq!(Dir8::E.turn_steps(Dir8::NE), 1);
        assert_eq!(Dir8::E.turn_steps(Dir8::S), 2);
        assert_eq!(Dir8::N.turn_steps(Dir8::SE), 3);
        assert_eq!(Dir8::W.turn_steps(Dir8::E), 4);
        for d in Dir8::ALL {
            let (dx, dy) = d.offset();
            assert_eq!(Dir8::from_offset(dx, dy), Some(d));
            assert_eq!(d.opposite().opposite(), d);
        }
    }

    #[test]
    fn pixel_serializes_as_pair() {
        let s = serde_json::to_string(&Pixel::new(3, -4)).unwrap();
        assert_eq!(s, "[3,-4]");
        let p: Pixel = serde_json::from_str("[7,8]").unwrap();
        assert_eq!(p, Pixel::new(7, 8));
    }

    #[test]
    fn rasterized_polyline_is_8_connected() {
        let poly = [Pixel::new(0, 0), Pixel::new(7, 3), Pixel::new(2, 9)];
        let r = rasterize_polyline(&poly, true);
        for w in r.windows(2) {
            assert!(w[0].is_8_adjacent(w[1]), "{:?}", w);
        }
        assert!(r.last().unwrap().is_8_adjacent(r[0]));
    }

    #[test]
    fn dilation_is_chebyshev() {
        let m = Mask::from_pixels(7, 7, [Pixel::new(3, 3)]);
        let d = m.dilate(2);
        assert_eq!(d.count(), 25);
        assert!(d.get(Pixel::new(1, 1)));
        assert!(!d.get(Pixel::new(0, 3)));
    }

    #[test]
    fn simple_polygon_detection() {
        let sq = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        assert!(is_simple_polygon(&sq));
        let bow = [sq[0], sq[2], sq[1], sq[3]];
        assert!(!is_simple_polygon(&bow));
        assert!(signed_area(&sq) > 0.0);
    }
}
