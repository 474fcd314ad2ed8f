use crate::error::{Error, Result};
use crate::geometry::{Mask, Pixel};

pub const AXIAL_STEP: u32 = 10;
pub const DIAGONAL_STEP: u32 = 14;

/// Chamfer distance in tenths of a pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DTField {
    width: usize,
    height: usize,
    dist: Vec<u32>,
}

impl DTField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[u32] {
        &self.dist
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.dist[y * self.width + x]
    }

    pub fn at(&self, p: Pixel) -> Option<u32> {
        (p.x >= 0 && p.y >= 0 && (p.x as usize) < self.width && (p.y as usize) < self.height)
            .then(|| self.get(p.x as usize, p.y as usize))
    }
}

/// Two-pass chamfer transform with axial weight 10 and diagonal weight 14.
pub fn chamfer_dt(boundary: &Mask) -> Result<DTField> {
    if boundary.is_empty() {
        return Err(Error::InvalidArgument(
            "distance transform needs a non-empty boundary".into(),
        ));
    }
    let (w, h) = (boundary.width(), boundary.height());
    let far = (3 * w.max(h) * AXIAL_STEP as usize) as u32;
    let mut d: Vec<u32> = boundary
        .bits()
        .iter()
        .map(|&b| if b { 0 } else { far })
        .collect();
    // forward: west, north-west, north, north-east
    for y in 0..h {
        for x in 0..w {
            let mut v = d[y * w + x];
            if x > 0 {
                v = v.min(d[y * w + x - 1] + AXIAL_STEP);
            }
            if y > 0 {
                let up = (y - 1) * w;
                v = v.min(d[up + x] + AXIAL_STEP);
                if x > 0 {
                    v = v.min(d[up + x - 1] + DIAGONAL_STEP);
                }
                if x + 1 < w {
                    v = v.min(d[up + x + 1] + DIAGONAL_STEP);
                }
            }
            d[y * w + x] = v;
        }
    }
    // backward: east, south-east, south, south-west
    for y in (0..h).rev() {
        for x in (0..w).rev() {
            let mut v = d[y * w + x];
            if x + 1 < w {
                v = v.min(d[y * w + x + 1] + AXIAL_STEP);
            }
            if y + 1 < h {
                let down = (y + 1) * w;
                v = v.min(d[down + x] + AXIAL_STEP);
                if x + 1 < w {
                    v = v.min(d[down + x + 1] + DIAGONAL_STEP);
                }
                if x > 0 {
                    v = v.min(d[down + x - 1] + DIAGONAL_STEP);
                }
            }
            d[y * w + x] = v;
        }
    }
    Ok(DTField {
        width: w,
        height: h,
        dist: d,
    })
}

/// Chamfer transform of the pixels of a polyline.
pub fn polyline_dt(points: &[Pixel], width: usize, height: usize) -> Result<DTField> {
    chamfer_dt(&Mask::from_pixels(width, height, points.iter().copied()))
}

/// Pixels within `width` pixels (chamfer units `10 * width`) of the boundary.
pub fn strip_mask(dt: &DTField, width: usize) -> Result<Mask> {
    if width == 0 {
        return Err(Error::InvalidArgument(
            "strip width must be at least 1".into(),
        ));
    }
    let limit = (width as u64 * AXIAL_STEP as u64).min(u32::MAX as u64) as u32;
    Ok(Mask::from_bits(
        dt.width,
        dt.height,
        dt.dist.iter().map(|&v| v <= limit).collect(),
    ))
}
