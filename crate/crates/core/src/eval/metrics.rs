use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{rasterize_polyline, Mask, Pixel};
use crate::lw3d::{chamfer_dt, AXIAL_STEP};
use crate::volume::ContourSet;

/// One segmentation run: its contours plus bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunResult {
    pub id: String,
    pub contours: ContourSet,
    pub slice_times_ms: Vec<f64>,
    pub seed_count: usize,
    pub auto_corrections: usize,
}

fn raster_mask(contour: &[Pixel], width: usize, height: usize, what: &'static str) -> Result<Mask> {
    if contour.is_empty() {
        return Err(Error::DegenerateContour(format!("{what} contour is empty")));
    }
    let mut m = Mask::new(width, height);
    for p in rasterize_polyline(contour, true) {
        if !m.contains(p) {
            return Err(Error::PixelOutside {
                pixel: p,
                context: "image",
            });
        }
        m.set(p, true);
    }
    Ok(m)
}

/// Raw directed error: summed chamfer distance (tenths of a pixel) from the
/// rasterized `b` to `a`, and the number of rasterized pixels of `b`.
pub fn contour_error_sum(
    a: &[Pixel],
    b: &[Pixel],
    width: usize,
    height: usize,
) -> Result<(u64, usize)> {
    let ma = raster_mask(a, width, height, "reference")?;
    let mb = raster_mask(b, width, height, "compared")?;
    let dt = chamfer_dt(&ma)?;
    let sum = mb.pixels().map(|p| dt.at(p).expect("inside") as u64).sum();
    Ok((sum, mb.count()))
}

/// Mean distance in pixels from the boundary pixels of `b` to boundary `a`.
pub fn contour_error(a: &[Pixel], b: &[Pixel], width: usize, height: usize) -> Result<f64> {
    let (sum, n) = contour_error_sum(a, b, width, height)?;
    Ok(sum as f64 / (AXIAL_STEP as f64 * n as f64))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairError {
    pub run_a: String,
    pub run_b: String,
    pub slice: usize,
    pub error_px: f64,
}

/// Errors over all ordered pairs of distinct runs on `slice`.
pub fn pair_errors(
    runs: &[RunResult],
    slice: usize,
    width: usize,
    height: usize,
) -> Result<Vec<PairError>> {
    if runs.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 runs, got {}",
            runs.len()
        )));
    }
    let contours = runs
        .iter()
        .map(|r| {
            r.contours.contour(slice).ok_or_else(|| {
                Error::InvalidArgument(format!("run {} has no contour on slice {slice}", r.id))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(runs.len() * (runs.len() - 1));
    for (i, a) in contours.iter().enumerate() {
        for (j, b) in contours.iter().enumerate() {
            if i != j {
                out.push(PairError {
                    run_a: runs[i].id.clone(),
                    run_b: runs[j].id.clone(),
                    slice,
                    error_px: contour_error(a, b, width, height)?,
                });
            }
        }
    }
    Ok(out)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Mean of the ordered-pair errors.
pub fn mutual_error(runs: &[RunResult], slice: usize, width: usize, height: usize) -> Result<f64> {
    let errs: Vec<f64> = pair_errors(runs, slice, width, height)?
        .iter()
        .map(|e| e.error_px)
        .collect();
    Ok(mean_std(&errs).0)
}

/// Population standard deviation of the ordered-pair errors.
pub fn repeatability(runs: &[RunResult], slice: usize, width: usize, height: usize) -> Result<f64> {
    let errs: Vec<f64> = pair_errors(runs, slice, width, height)?
        .iter()
        .map(|e| e.error_px)
        .collect();
    Ok(mean_std(&errs).1)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorProfile {
    pub per_slice: Vec<(usize, f64)>,
    pub mean: f64,
    pub norm2: f64,
}

/// Error of each contour of `run` against `reference` on the slices both cover.
pub fn error_profile(
    reference: &ContourSet,
    run: &ContourSet,
    width: usize,
    height: usize,
) -> Result<ErrorProfile> {
    let mut per_slice = Vec::new();
    for sc in &run.slices {
        if let Some(r) = reference.contour(sc.index) {
            per_slice.push((sc.index, contour_error(r, &sc.contour, width, height)?));
        }
    }
    if per_slice.is_empty() {
        return Err(Error::InvalidArgument(
            "no slice in common with the reference".into(),
        ));
    }
    let vals: Vec<f64> = per_slice.iter().map(|v| v.1).collect();
    Ok(ErrorProfile {
        mean: mean_std(&vals).0,
        norm2: vals.iter().map(|v| v * v).sum::<f64>().sqrt(),
        per_slice,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceSummary {
    pub slice: usize,
    pub mean: f64,
    pub std: f64,
}

/// Pairwise errors of several runs over every slice they all cover.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub rows: Vec<PairError>,
    pub slices: Vec<SliceSummary>,
}

impl MetricsReport {
    pub fn from_runs(runs: &[RunResult], width: usize, height: usize) -> Result<Self> {
        if runs.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 runs, got {}",
                runs.len()
            )));
        }
        let first = &runs[0];
        let common: Vec<usize> = first
            .contours
            .slices
            .iter()
            .map(|s| s.index)
            .filter(|&k| runs.iter().all(|r| r.contours.contour(k).is_some()))
            .collect();
        let mut rows = Vec::new();
        let mut slices = Vec::new();
        for k in common {
            let errs = pair_errors(runs, k, width, height)?;
            let vals: Vec<f64> = errs.iter().map(|e| e.error_px).collect();
            let (mean, std) = mean_std(&vals);
            slices.push(SliceSummary {
                slice: k,
                mean,
                std,
            });
            rows.extend(errs);
        }
        Ok(MetricsReport { rows, slices })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("run_a,run_b,slice,error_px\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{}", r.run_a, r.run_b, r.slice, r.error_px);
        }
        s
    }

    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string(&serde_json::json!({ "slices": self.slices }))
            .expect("summary serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::GroundTruth;
    use crate::geometry::Point2;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn circle(r: f64) -> Vec<Pixel> {
        GroundTruth::Ellipse {
            center: Point2::new(32.0, 32.0),
            rx: r,
            ry: r,
        }
        .rasterize()
    }

    fn run(id: &str, contour: Vec<Pixel>) -> RunResult {
        RunResult {
            id: id.into(),
            contours: ContourSet {
                spacing: 1.0,
                segments: vec![[0, 0]],
                slices: vec![crate::volume::SliceContour { index: 0, contour }],
            },
            slice_times_ms: vec![0.0],
            seed_count: 0,
            auto_corrections: 0,
        }
    }

    #[test]
    fn self_error_is_zero() {
        let c = circle(10.0);
        assert_eq!(contour_error(&c, &c, 64, 64).unwrap(), 0.0);
    }

    #[test]
    fn shifted_line_is_one_pixel() {
        let a: Vec<Pixel> = (5..45).map(|x| Pixel::new(x, 20)).collect();
        let b: Vec<Pixel> = (5..45).map(|x| Pixel::new(x, 21)).collect();
        assert_abs_diff_eq!(contour_error(&a, &b, 64, 64).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(contour_error_sum(&a, &b, 64, 64).unwrap(), (400, 40));
    }

    #[test]
    fn concentric_circles_about_two() {
        let (a, b) = (circle(10.0), circle(12.0));
        let e = contour_error(&a, &b, 64, 64).unwrap();
        // exact Euclidean mean over the same rasters
        let ra = rasterize_polyline(&a, true);
        let mut rb = rasterize_polyline(&b, true);
        rb.sort();
        rb.dedup();
        let exact = rb
            .iter()
            .map(|p| {
                ra.iter()
                    .map(|q| p.to_point().dist(q.to_point()))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum::<f64>()
            / rb.len() as f64;
        assert!(e >= 0.98 * exact && e <= 1.08 * exact, "{e} vs {exact}");
        assert!((e - 2.0).abs() < 0.25, "{e}");
    }

    #[test]
    fn outside_pixels_rejected() {
        let a = vec![Pixel::new(0, 0), Pixel::new(70, 0)];
        assert!(contour_error(&a, &a, 64, 64).is_err());
        assert!(contour_error(&[], &a, 64, 64).is_err());
    }

    #[test]
    fn mutual_and_repeatability() {
        let a = run("a", circle(10.0));
        let b = run("b", circle(12.0));
        let ab = contour_error(&circle(10.0), &circle(12.0), 64, 64).unwrap();
        let ba = contour_error(&circle(12.0), &circle(10.0), 64, 64).unwrap();
        let runs = [a.clone(), b.clone()];
        assert_abs_diff_eq!(
            mutual_error(&runs, 0, 64, 64).unwrap(),
            (ab + ba) / 2.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            repeatability(&runs, 0, 64, 64).unwrap(),
            (ab - ba).abs() / 2.0,
            epsilon = 1e-12
        );
        let same = [a.clone(), run("c", circle(10.0))];
        assert_eq!(mutual_error(&same, 0, 64, 64).unwrap(), 0.0);
        assert_eq!(repeatability(&same, 0, 64, 64).unwrap(), 0.0);
        assert!(mutual_error(std::slice::from_ref(&a), 0, 64, 64).is_err());
        let four = [a, b, run("c", circle(9.0)), run("d", circle(14.0))];
        assert_eq!(pair_errors(&four, 0, 64, 64).unwrap().len(), 12);
        assert_eq!(mean_std(&[0.0, 2.0]), (1.0, 1.0));
        assert_eq!(mean_std(&[1.0; 4]), (1.0, 0.0));
    }

    #[test]
    fn report_formats() {
        let runs = [run("a", circle(10.0)), run("b", circle(11.0))];
        let rep = MetricsReport::from_runs(&runs, 64, 64).unwrap();
        let csv = rep.to_csv();
        assert!(csv.starts_with("run_a,run_b,slice,error_px\na,b,0,"));
        assert_eq!(csv.lines().count(), 3);
        let v: serde_json::Value = serde_json::from_str(&rep.summary_json()).unwrap();
        assert_eq!(v["slices"][0]["slice"], 0);
        assert!(v["slices"][0]["std"].as_f64().unwrap() >= 0.0);
    }

    proptest! {
        #[test]
        fn mutual_error_ignores_run_order(radii in proptest::collection::vec(5.0f64..25.0, 2..5), rot in 0usize..5) {
            let runs: Vec<RunResult> = radii.iter().enumerate().map(|(i, &r)| run(&i.to_string(), circle(r))).collect();
            let mut perm = runs.clone();
            perm.rotate_left(rot % runs.len());
            perm.reverse();
            let a = mutual_error(&runs, 0, 64, 64).unwrap();
            let b = mutual_error(&perm, 0, 64, 64).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn error_grows_with_dilation(r in 6.0f64..20.0, d1 in 1.0f64..5.0, extra in 1.0f64..6.0) {
            let a = circle(r);
            let e1 = contour_error(&a, &circle(r + d1), 64, 64).unwrap();
            let e2 = contour_error(&a, &circle(r + d1 + extra), 64, 64).unwrap();
            prop_assert!(e2 >= e1);
            prop_assert!(e1 >= 0.0);
        }
    }
}
