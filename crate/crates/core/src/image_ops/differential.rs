use crate::error::Result;
use crate::volume::Image;

/// Real-valued per-pixel field with its cached maximum.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub max_value: f64,
}

impl ScalarField {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Self {
        let max_value = values.iter().copied().fold(0.0_f64, f64::max);
        ScalarField {
            width,
            height,
            values,
            max_value,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

/// Per-pixel flag for Laplacian zero crossings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZeroCrossingMask {
    pub width: usize,
    pub height: usize,
    pub flags: Vec<bool>,
}

impl ZeroCrossingMask {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.flags[y * self.width + x]
    }
}

/// 3x3 Sobel gradient magnitude with edge replication.
pub fn gradient_magnitude(img: &Image) -> Result<ScalarField> {
    img.ensure_livewire_domain()?;
    let (w, h) = (img.width(), img.height());
    let mut values = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let p = |dx: isize, dy: isize| img.get_clamped(x + dx, y + dy) as f64;
            let gx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            let gy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
            values.push(gx.hypot(gy));
        }
    }
    Ok(ScalarField::new(w, h, values))
}

/// 4-neighbour Laplacian (centre -4, cross +1) with edge replication.
pub fn laplacian(img: &Image) -> Result<Vec<i32>> {
    img.ensure_livewire_domain()?;
    let (w, h) = (img.width(), img.height());
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let p = |dx: isize, dy: isize| img.get_clamped(x + dx, y + dy) as i32;
            out.push(p(-1, 0) + p(1, 0) + p(0, -1) + p(0, 1) - 4 * p(0, 0));
        }
    }
    Ok(out)
}

/// Marks the pixels where the Laplacian crosses zero.
///
/// A non-zero pixel is flagged when a 4-neighbour has the opposite sign and a
/// larger magnitude; on equal magnitudes the positive side is flagged so a
/// symmetric crossing marks a single pixel. A pixel whose Laplacian is exactly
/// zero is flagged when it sits between opposite signs along a row or column.
/// Flat neighbourhoods are never flagged.
pub fn laplacian_zero_crossings(img: &Image) -> Result<ZeroCrossingMask> {
    let lap = laplacian(img)?;
    let (w, h) = (img.width(), img.height());
    let at = |x: isize, y: isize| -> Option<i32> {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            None
        } else {
            Some(lap[y as usize * w + x as usize])
        }
    };
    let mut flags = vec![false; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let c = lap[y as usize * w + x as usize];
            let n = [at(x - 1, y), at(x + 1, y), at(x, y - 1), at(x, y + 1)];
            let flagged = if c == 0 {
                let opposite = |a: Option<i32>, b: Option<i32>| match (a, b) {
                    (Some(a), Some(b)) => (a > 0 && b < 0) || (a < 0 && b > 0),
                    _ => false,
                };
                opposite(n[0], n[1]) || opposite(n[2], n[3])
            } else {
                n.iter().flatten().any(|&q| {
                    q.signum() == -c.signum()
                        && (c.abs() < q.abs() || (c.abs() == q.abs() && c > 0))
                })
            };
            flags[y as usize * w + x as usize] = flagged;
        }
    }
    Ok(ZeroCrossingMask {
        width: w,
        height: h,
        flags,
    })
}
