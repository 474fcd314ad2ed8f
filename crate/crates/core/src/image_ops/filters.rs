use serde::{Deserialize, Serialize};

use super::quantize;
use crate::error::{Error, Result};
use crate::geometry::Mask;
use crate::volume::Image;

const DIFFUSION_STEP: f64 = 0.2;
const MAX_DIFFUSION_ITERATIONS: u32 = 100;

/// How far (Chebyshev pixels) a source pixel can influence a filtered pixel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InfluenceRadius {
    Pixels(usize),
    WholeImage,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FilterKind {
    /// Perona-Malik diffusion with conductance 1 / (1 + (s/K)^2), step 0.2.
    AnisotropicDiffusion { iterations: u32, k: f64 },
    /// Sigmoid remap `255 / (1 + exp(-slope * (I - center)))`.
    Contrast { center: f64, slope: f64 },
    /// Global cumulative-histogram remap.
    HistogramEq,
    /// `I + amount * (I - gaussian(I, sigma))`.
    UnsharpMask { amount: f64, sigma: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    #[serde(flatten)]
    pub kind: FilterKind,
}

impl FilterSpec {
    pub fn new(kind: FilterKind) -> Result<Self> {
        let spec = FilterSpec { kind };
        spec.validate()?;
        Ok(spec)
    }

    /// Builds a spec from a kind name and `name=value` parameters, filling
    /// defaults for anything omitted.
    pub fn from_params(kind: &str, params: &[(String, f64)]) -> Result<Self> {
        let get = |name: &str, default: f64| -> f64 {
            params
                .iter()
                .rev()
                .find(|(k, _)| k == name)
                .map(|(_, v)| *v)
                .unwrap_or(default)
        };
        let known: &[&str] = match kind {
            "anisotropic_diffusion" | "diffusion" => &["iterations", "k"],
            "contrast" => &["center", "slope"],
            "histogram_eq" | "histogram" => &[],
            "unsharp_mask" | "unsharp" => &["amount", "sigma"],
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown filter kind `{other}`"
                )))
            }
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !known.contains(&k.as_str())) {
            return Err(Error::InvalidArgument(format!(
                "filter `{kind}` has no parameter `{k}`"
            )));
        }
        let kind = match kind {
            "anisotropic_diffusion" | "diffusion" => {
                let it = get("iterations", 10.0);
                if it < 0.0 || it.fract() != 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "iterations must be a whole number, got {it}"
                    )));
                }
                FilterKind::AnisotropicDiffusion {
                    iterations: it as u32,
                    k: get("k", 20.0),
                }
            }
            "contrast" => FilterKind::Contrast {
                center: get("center", 128.0),
                slope: get("slope", 0.05),
            },
            "histogram_eq" | "histogram" => FilterKind::HistogramEq,
            _ => FilterKind::UnsharpMask {
                amount: get("amount", 1.0),
                sigma: get("sigma", 1.0),
            },
        };
        FilterSpec::new(kind)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        match self.kind {
            FilterKind::AnisotropicDiffusion { iterations, k } => {
                if iterations > MAX_DIFFUSION_ITERATIONS {
                    return bad(format!(
                        "iterations {iterations} > {MAX_DIFFUSION_ITERATIONS}"
                    ));
                }
                if !(k > 0.0 && k <= 255.0) {
                    return bad(format!("K must be in (0, 255], got {k}"));
                }
            }
            FilterKind::Contrast { center, slope } => {
                if !(0.0..=255.0).contains(&center) {
                    return bad(format!("center must be in [0, 255], got {center}"));
                }
                if !(slope > 0.0 && slope.is_finite()) {
                    return bad(format!("slope must be positive, got {slope}"));
                }
            }
            FilterKind::HistogramEq => {}
            FilterKind::UnsharpMask { amount, sigma } => {
                if !(amount >= 0.0 && amount.is_finite()) {
                    return bad(format!("amount must be >= 0, got {amount}"));
                }
                if !(sigma > 0.0 && sigma <= 50.0) {
                    return bad(format!("sigma must be in (0, 50], got {sigma}"));
                }
            }
        }
        Ok(())
    }

    pub fn influence_radius(&self) -> InfluenceRadius {
        match self.kind {
            FilterKind::AnisotropicDiffusion { iterations, .. } => {
                InfluenceRadius::Pixels(iterations as usize)
            }
            FilterKind::Contrast { .. } => InfluenceRadius::Pixels(0),
            FilterKind::HistogramEq => InfluenceRadius::WholeImage,
            FilterKind::UnsharpMask { sigma, .. } => {
                InfluenceRadius::Pixels(gaussian_radius(sigma))
            }
        }
    }
}

fn gaussian_radius(sigma: f64) -> usize {
    (3.0 * sigma).ceil() as usize
}

/// A rectangular working window holding real-valued intensities.
struct Window {
    x0: usize,
    y0: usize,
    w: usize,
    h: usize,
    data: Vec<f64>,
}

impl Window {
    fn crop(img: &Image, x0: usize, y0: usize, x1: usize, y1: usize) -> Window {
        let (w, h) = (x1 - x0 + 1, y1 - y0 + 1);
        let mut data = Vec::with_capacity(w * h);
        for y in y0..=y1 {
            data.extend(
                img.pixels()[y * img.width() + x0..=y * img.width() + x1]
                    .iter()
                    .map(|&v| v as f64),
            );
        }
        Window { x0, y0, w, h, data }
    }

    #[inline]
    fn at(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.w as isize - 1) as usize;
        let y = y.clamp(0, self.h as isize - 1) as usize;
        self.data[y * self.w + x]
    }
}

fn diffuse(win: &mut Window, iterations: u32, k: f64) {
    let g = |s: f64| 1.0 / (1.0 + (s / k) * (s / k));
    let mut next = vec![0.0; win.data.len()];
    for _ in 0..iterations {
        for y in 0..win.h as isize {
            for x in 0..win.w as isize {
                let c = win.at(x, y);
                let flux: f64 = [(-1, 0), (1, 0), (0, -1), (0, 1)]
                    .iter()
                    .map(|&(dx, dy)| {
                        let d = win.at(x + dx, y + dy) - c;
                        g(d.abs()) * d
                    })
                    .sum();
                next[y as usize * win.w + x as usize] = c + DIFFUSION_STEP * flux;
            }
        }
        std::mem::swap(&mut win.data, &mut next);
    }
}

fn gaussian_blur(win: &Window, sigma: f64) -> Vec<f64> {
    let r = gaussian_radius(sigma) as isize;
    let mut kernel: Vec<f64> = (-r..=r)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|v| *v /= total);
    let mut tmp = vec![0.0; win.data.len()];
    for y in 0..win.h as isize {
        for x in 0..win.w as isize {
            tmp[y as usize * win.w + x as usize] = (-r..=r)
                .zip(&kernel)
                .map(|(i, kv)| kv * win.at(x + i, y))
                .sum();
        }
    }
    let rows = Window {
        x0: win.x0,
        y0: win.y0,
        w: win.w,
        h: win.h,
        data: tmp,
    };
    let mut out = vec![0.0; win.data.len()];
    for y in 0..win.h as isize {
        for x in 0..win.w as isize {
            out[y as usize * win.w + x as usize] = (-r..=r)
                .zip(&kernel)
                .map(|(i, kv)| kv * rows.at(x, y + i))
                .sum();
        }
    }
    out
}

fn filter_window(win: &mut Window, kind: &FilterKind) {
    match *kind {
        FilterKind::AnisotropicDiffusion { iterations, k } => diffuse(win, iterations, k),
        FilterKind::Contrast { center, slope } => {
            for v in &mut win.data {
                *v = 255.0 / (1.0 + (-slope * (*v - center)).exp());
            }
        }
        FilterKind::UnsharpMask { amount, sigma } => {
            if amount == 0.0 {
                return;
            }
            let blurred = gaussian_blur(win, sigma);
            for (v, b) in win.data.iter_mut().zip(blurred) {
                *v += amount * (*v - b);
            }
        }
        FilterKind::HistogramEq => unreachable!("global filter handled separately"),
    }
}

fn equalize(img: &Image) -> Image {
    let mut hist = [0usize; 256];
    for &v in img.pixels() {
        hist[v as usize] += 1;
    }
    let n = img.pixels().len();
    let mut cdf = [0usize; 256];
    let mut acc = 0;
    for (c, h) in cdf.iter_mut().zip(hist) {
        acc += h;
        *c = acc;
    }
    let cdf_min = cdf.iter().copied().find(|&c| c > 0).unwrap_or(0);
    if n == cdf_min {
        return img.clone();
    }
    let lut: Vec<u8> = cdf
        .iter()
        .map(|&c| quantize((c.saturating_sub(cdf_min)) as f64 / (n - cdf_min) as f64 * 255.0))
        .collect();
    let px = img.pixels().iter().map(|&v| lut[v as usize]).collect();
    Image::new(img.width(), img.height(), px).expect("same shape")
}

/// Applies `spec` to `img`. When `region` is given only pixels inside it are
/// filtered, reading source pixels within the influence radius of the
/// region; everything outside the region is copied unchanged.
pub fn apply_filter(img: &Image, spec: &FilterSpec, region: Option<&Mask>) -> Result<Image> {
    spec.validate()?;
    let radius = match spec.influence_radius() {
        InfluenceRadius::WholeImage => {
            if region.is_some() {
                return Err(Error::InvalidArgument(
                    "histogram equalization acts on the whole image and cannot be region-restricted".into(),
                ));
            }
            return Ok(equalize(img));
        }
        InfluenceRadius::Pixels(r) => r,
    };
    let (w, h) = (img.width(), img.height());
    let (bbox, region) = match region {
        None => ((0, 0, w - 1, h - 1), None),
        Some(m) => {
            if m.width() != w || m.height() != h {
                return Err(Error::InvalidArgument(format!(
                    "region is {}x{}, image is {w}x{h}",
                    m.width(),
                    m.height()
                )));
            }
            match m.dilate(radius).bounding_box() {
                None => return Ok(img.clone()),
                Some(bb) => (bb, Some(m)),
            }
        }
    };
    let mut win = Window::crop(img, bbox.0, bbox.1, bbox.2, bbox.3);
    filter_window(&mut win, &spec.kind);
    let mut out = img.clone();
    for wy in 0..win.h {
        for wx in 0..win.w {
            let (x, y) = (win.x0 + wx, win.y0 + wy);
            let inside = region.is_none_or(|m| m.bits()[y * w + x]);
            if inside {
                out.set(x, y, quantize(win.data[wy * win.w + wx]));
            }
        }
    }
    Ok(out)
}
