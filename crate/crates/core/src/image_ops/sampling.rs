use serde::{Deserialize, Serialize};

use super::quantize;
use crate::error::{Error, Result};
use crate::geometry::{Mask, Pixel, Point2};
use crate::volume::{Image, Volume};

/// A line in the slice plane defining an orthogonal cut through the volume.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutLine {
    pub p0: Point2,
    pub p1: Point2,
}

impl CutLine {
    pub fn new(p0: Point2, p1: Point2) -> Result<Self> {
        let cut = CutLine { p0, p1 };
        if !(cut.length() >= 2.0) {
            return Err(Error::InvalidArgument(format!(
                "cut line too short ({:.3} px, need >= 2)",
                cut.length()
            )));
        }
        Ok(cut)
    }

    pub fn length(&self) -> f64 {
        self.p0.dist(self.p1)
    }

    /// Number of unit-spaced samples from `p0` towards `p1`.
    pub fn sample_count(&self) -> usize {
        self.length().floor() as usize + 1
    }

    pub fn direction(&self) -> Point2 {
        self.p1.sub(self.p0).scale(1.0 / self.length())
    }

    /// Slice-plane point at arc position `s` (pixels from `p0`).
    pub fn point_at(&self, s: f64) -> Point2 {
        self.p0.add(self.direction().scale(s))
    }

    pub(crate) fn check_bounds(&self, width: usize, height: usize) -> Result<()> {
        for p in [self.p0, self.p1] {
            let inside =
                p.x >= 0.0 && p.y >= 0.0 && p.x <= (width - 1) as f64 && p.y <= (height - 1) as f64;
            if !inside || !p.x.is_finite() || !p.y.is_finite() {
                return Err(Error::PointOutOfBounds { x: p.x, y: p.y });
            }
        }
        if self.length() < 2.0 {
            return Err(Error::InvalidArgument("cut line shorter than 2 px".into()));
        }
        Ok(())
    }

    fn sample_points(&self) -> impl Iterator<Item = Point2> + '_ {
        let dir = self.direction();
        (0..self.sample_count()).map(move |i| self.p0.add(dir.scale(i as f64)))
    }
}

fn bilinear(img: &Image, p: Point2) -> f64 {
    let (w, h) = (img.width(), img.height());
    let x0 = (p.x.floor() as usize).min(w - 1);
    let y0 = (p.y.floor() as usize).min(h - 1);
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let fx = p.x - x0 as f64;
    let fy = p.y - y0 as f64;
    let v = |x, y| img.get(x, y) as f64;
    let top = v(x0, y0) * (1.0 - fx) + v(x1, y0) * fx;
    let bottom = v(x0, y1) * (1.0 - fx) + v(x1, y1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Bilinear samples at unit arc-length spacing from `p0` towards `p1`.
pub fn sample_line(img: &Image, cut: &CutLine) -> Result<Vec<f64>> {
    cut.check_bounds(img.width(), img.height())?;
    Ok(cut.sample_points().map(|p| bilinear(img, p)).collect())
}

/// Resamples the volume along `cut`: row `k` is the profile of slice `k`.
pub fn build_orthogonal_cut(v: &Volume, cut: &CutLine) -> Result<Image> {
    cut.check_bounds(v.width(), v.height())?;
    let width = cut.sample_count();
    let mut pixels = Vec::with_capacity(width * v.depth());
    for slice in v.slices() {
        pixels.extend(sample_line(&slice, cut)?.into_iter().map(quantize));
    }
    Image::new(width, v.depth(), pixels)
}

/// Pixels read by bilinear sampling along `cut`. Used as the filter region so
/// only a strip around the cut line gets filtered.
pub fn cut_region(cut: &CutLine, width: usize, height: usize) -> Mask {
    let mut m = Mask::new(width, height);
    for p in cut.sample_points() {
        let (x0, y0) = (p.x.floor() as i32, p.y.floor() as i32);
        for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            m.set(Pixel::new(x0 + dx, y0 + dy), true);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cut(x0: f64, y0: f64, x1: f64, y1: f64) -> CutLine {
        CutLine::new(Point2::new(x0, y0), Point2::new(x1, y1)).unwrap()
    }

    #[test]
    fn constant_image_samples_constant() {
        let img = Image::filled(10, 10, 9);
        let s = sample_line(&img, &cut(1.0, 4.5, 8.3, 4.5)).unwrap();
        assert_eq!(s.len(), 8);
        assert!(s.iter().all(|&v| (v - 9.0).abs() < 1e-12));
    }

    #[test]
    fn axis_aligned_hits_pixel_values() {
        let img = Image::from_fn(6, 6, |x, y| (x * 7 + y * 31) as u8);
        let s = sample_line(&img, &cut(0.0, 2.0, 5.0, 2.0)).unwrap();
        let expected: Vec<f64> = (0..6).map(|x| img.get(x, 2) as f64).collect();
        assert_eq!(s, expected);
        let col = sample_line(&img, &cut(3.0, 5.0, 3.0, 1.0)).unwrap();
        assert_eq!(
            col,
            vec![
                img.get(3, 5) as f64,
                img.get(3, 4) as f64,
                img.get(3, 3) as f64,
                img.get(3, 2) as f64,
                img.get(3, 1) as f64
            ]
        );
    }

    #[test]
    fn diagonal_on_ramp_is_linear() {
        // I = 10x; along a 45 degree line x(t) = 1 + t/sqrt(2), so I(t) = 10 + 10t/sqrt(2).
        let img = Image::from_fn(12, 12, |x, _| (10 * x) as u8);
        let s = sample_line(&img, &cut(1.0, 1.0, 10.0, 10.0)).unwrap();
        assert_eq!(s.len(), (9.0f64 * 2f64.sqrt()).floor() as usize + 1);
        for (t, v) in s.iter().enumerate() {
            let expected = 10.0 + 10.0 * t as f64 / 2f64.sqrt();
            assert!((v - expected).abs() < 1e-9, "t={t} {v} vs {expected}");
        }
    }

    #[test]
    fn out_of_bounds_and_short_cuts_rejected() {
        let img = Image::filled(10, 10, 0);
        assert!(sample_line(&img, &cut(0.0, 0.0, 9.5, 0.0)).is_err());
        assert!(sample_line(&img, &cut(-0.1, 0.0, 5.0, 0.0)).is_err());
        assert!(CutLine::new(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)).is_err());
    }

    #[test]
    fn cut_of_single_slice_is_profile() {
        let img = Image::from_fn(8, 8, |x, y| (x * 20 + y) as u8);
        let v = Volume::from_slices(std::slice::from_ref(&img)).unwrap();
        let c = cut(0.5, 3.25, 7.0, 6.0);
        let out = build_orthogonal_cut(&v, &c).unwrap();
        assert_eq!(out.height(), 1);
        let prof: Vec<u8> = sample_line(&img, &c)
            .unwrap()
            .into_iter()
            .map(quantize)
            .collect();
        assert_eq!(out.pixels(), prof.as_slice());
    }

    #[test]
    fn cut_rows_follow_slices() {
        let slices: Vec<Image> = (0..4).map(|k| Image::filled(9, 9, k as u8)).collect();
        let v = Volume::from_slices(&slices).unwrap();
        let out = build_orthogonal_cut(&v, &cut(1.0, 1.0, 7.0, 5.0)).unwrap();
        for k in 0..4 {
            assert!((0..out.width()).all(|x| out.get(x, k) == k as u8));
        }
    }

    #[test]
    fn region_covers_sampled_pixels() {
        let c = cut(1.2, 1.7, 8.6, 6.1);
        let m = cut_region(&c, 10, 10);
        for p in c.sample_points() {
            assert!(m.get(Pixel::new(p.x.floor() as i32, p.y.floor() as i32)));
        }
        assert!(m.count() < 100);
    }
}
