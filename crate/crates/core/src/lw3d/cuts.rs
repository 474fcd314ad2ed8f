use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{is_simple_polygon, signed_area, Pixel, Point2};
use crate::image_ops::CutLine;

pub const DEFAULT_WIGGLE_RADIUS: usize = 3;
pub const SAFETY_RANGE: (f64, f64) = (1.1, 2.0);
const BRUTE_FORCE_MAX_CUTS: usize = 12;

/// A cut line and the boundary traced in its resampled image
/// (column = sample index along the line, row = slice index).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutBoundary {
    pub cut: CutLine,
    pub polyline: Vec<Pixel>,
}

/// Slice range in which the boundary keeps its topology, with its cuts in
/// creation order.
#[derive(Clone, Debug, PartialEq)]
pub struct TopologySegment {
    pub first_slice: usize,
    pub last_slice: usize,
    pub cuts: Vec<CutBoundary>,
}

impl TopologySegment {
    pub fn new(first_slice: usize, last_slice: usize, cuts: Vec<CutBoundary>) -> Result<Self> {
        if first_slice > last_slice {
            return Err(Error::InvalidArgument(format!(
                "segment first slice {first_slice} after last slice {last_slice}"
            )));
        }
        if cuts.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a segment needs at least 2 cuts, got {}",
                cuts.len()
            )));
        }
        for (i, c) in cuts.iter().enumerate() {
            if !c.polyline.windows(2).all(|w| w[0].is_8_adjacent(w[1])) {
                return Err(Error::InvalidArgument(format!(
                    "boundary of cut {} is not 8-connected",
                    i + 1
                )));
            }
        }
        Ok(TopologySegment {
            first_slice,
            last_slice,
            cuts,
        })
    }

    pub fn slices(&self) -> std::ops::RangeInclusive<usize> {
        self.first_slice..=self.last_slice
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StripParams {
    pub safety_factor: f64,
}

impl StripParams {
    pub fn new(safety_factor: f64) -> Result<Self> {
        if !(SAFETY_RANGE.0..=SAFETY_RANGE.1).contains(&safety_factor) {
            return Err(Error::InvalidArgument(format!(
                "safety factor {safety_factor} outside [{}, {}]",
                SAFETY_RANGE.0, SAFETY_RANGE.1
            )));
        }
        Ok(StripParams { safety_factor })
    }
}

impl Default for StripParams {
    fn default() -> Self {
        StripParams { safety_factor: 1.5 }
    }
}

/// Columns where the cut boundary meets `row`, with wiggles merged. Runs of
/// boundary pixels lying along the row contribute their two ends when longer
/// than the wiggle radius and every column otherwise. Sorted columns closer
/// than `wiggle` are merged into one cluster, represented by its median.
pub fn row_crossings(polyline: &[Pixel], row: usize, wiggle: usize) -> Vec<f64> {
    let mut cols: Vec<i32> = Vec::new();
    let mut i = 0;
    while i < polyline.len() {
        if polyline[i].y != row as i32 {
            i += 1;
            continue;
        }
        let start = i;
        while i < polyline.len() && polyline[i].y == row as i32 {
            i += 1;
        }
        let run = &polyline[start..i];
        let lo = run.iter().map(|p| p.x).min().expect("non-empty run");
        let hi = run.iter().map(|p| p.x).max().expect("non-empty run");
        if (hi - lo) as usize > wiggle {
            cols.extend([lo, hi]);
        } else {
            cols.extend(run.iter().map(|p| p.x));
        }
    }
    cols.sort_unstable();
    let mut clusters: Vec<Vec<i32>> = Vec::new();
    for c in cols {
        match clusters.last_mut() {
            Some(cl) if (c - *cl.last().expect("non-empty")) as usize <= wiggle => cl.push(c),
            _ => clusters.push(vec![c]),
        }
    }
    clusters
        .iter()
        .map(|cl| {
            let n = cl.len();
            if n % 2 == 1 {
                cl[n / 2] as f64
            } else {
                (cl[n / 2 - 1] + cl[n / 2]) as f64 / 2.0
            }
        })
        .collect()
}

/// The two arc positions where the cut boundary crosses `slice`.
pub fn slice_columns(cb: &CutBoundary, slice: usize, wiggle: usize) -> Result<[f64; 2]> {
    let cols = row_crossings(&cb.polyline, slice, wiggle);
    match cols[..] {
        [a, b] => Ok([a, b]),
        _ => Err(Error::Topology {
            slice,
            found: cols.len(),
        }),
    }
}

/// Slice-plane seed points of one cut on `slice`: start side first.
pub fn slice_seeds(cb: &CutBoundary, slice: usize, wiggle: usize) -> Result<[Point2; 2]> {
    let [a, b] = slice_columns(cb, slice, wiggle)?;
    Ok([cb.cut.point_at(a), cb.cut.point_at(b)])
}

/// `ceil(safety * max(largest column change between consecutive rows, 1))`.
pub fn strip_width_from_columns(branches: &[Vec<f64>], safety_factor: f64) -> Result<usize> {
    if branches.iter().all(|b| b.len() < 2) {
        return Err(Error::InvalidArgument(
            "need boundary columns on at least two slices".into(),
        ));
    }
    let max_change = branches
        .iter()
        .flat_map(|b| b.windows(2).map(|w| (w[1] - w[0]).abs()))
        .fold(0.0, f64::max);
    Ok((safety_factor * max_change.max(1.0) - 1e-9).ceil() as usize)
}

/// Strip width for a segment from the backward differences of every cut
/// boundary branch across consecutive slices.
pub fn strip_width(segment: &TopologySegment, params: StripParams, wiggle: usize) -> Result<usize> {
    let mut branches = Vec::new();
    for (i, cb) in segment.cuts.iter().enumerate() {
        let mut rows: Vec<i32> = cb.polyline.iter().map(|p| p.y).collect();
        rows.sort_unstable();
        rows.dedup();
        if rows.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "boundary of cut {} lies on a single slice row",
                i + 1
            )));
        }
        let mut left = Vec::new();
        let mut right = Vec::new();
        for s in segment.slices() {
            let [a, b] = slice_columns(cb, s, wiggle)?;
            left.push(a);
            right.push(b);
        }
        branches.push(left);
        branches.push(right);
    }
    strip_width_from_columns(&branches, params.safety_factor)
}

/// Seeds visited in order: all start-side points, then all end-side points.
pub fn cyclic_order(seeds: &[[Point2; 2]]) -> Vec<Point2> {
    seeds
        .iter()
        .map(|s| s[0])
        .chain(seeds.iter().map(|s| s[1]))
        .collect()
}

fn order_is_valid(seeds: &[[Point2; 2]]) -> bool {
    let poly = cyclic_order(seeds);
    is_simple_polygon(&poly) && signed_area(&poly).abs() > 1e-9
}

/// Checks that the seed points of the segment's first slice, visited as
/// start sides then end sides, trace a simple, consistently oriented polygon.
/// On failure the error names the 1-based index of the offending cut.
pub fn validate_cut_ordering(segment: &TopologySegment, wiggle: usize) -> Result<()> {
    let seeds = segment
        .cuts
        .iter()
        .map(|cb| slice_seeds(cb, segment.first_slice, wiggle))
        .collect::<Result<Vec<_>>>()?;
    check_seed_order(&seeds)
}

/// Ordering test on already derived seed pairs.
pub fn check_seed_order(seeds: &[[Point2; 2]]) -> Result<()> {
    let k = seeds.len();
    if k < 2 {
        return Err(Error::InvalidArgument(
            "ordering needs at least 2 cuts".into(),
        ));
    }
    if order_is_valid(seeds) {
        return Ok(());
    }
    // Smallest set of cuts (the first one fixed) whose reversal repairs the order.
    if k <= BRUTE_FORCE_MAX_CUTS {
        let free = k - 1;
        let mut best: Option<(u32, usize)> = None;
        for subset in 1u32..(1 << free) {
            let size = subset.count_ones();
            if best.is_some_and(|(s, _)| size > s) {
                continue;
            }
            let flipped: Vec<[Point2; 2]> = seeds
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    if i > 0 && subset & (1 << (i - 1)) != 0 {
                        [s[1], s[0]]
                    } else {
                        *s
                    }
                })
                .collect();
            if order_is_valid(&flipped) {
                let first = subset.trailing_zeros() as usize + 2;
                best = match best {
                    Some((s, c)) if s == size => Some((s, c.min(first))),
                    _ => Some((size, first)),
                };
            }
        }
        if let Some((_, cut)) = best {
            return Err(Error::CutOrdering {
                cut,
                reason: "its orientation is reversed relative to the first cut".into(),
            });
        }
    }
    let cut = (2..=k).find(|&j| !order_is_valid(&seeds[..j])).unwrap_or(k);
    Err(Error::CutOrdering {
        cut,
        reason: format!("cuts 1..={cut} do not form a simple cyclic order"),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutSpec {
    pub p0: Point2,
    pub p1: Point2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Vec<Pixel>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub first: usize,
    pub last: usize,
    pub cuts: Vec<CutSpec>,
}

/// Cut definitions file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CutsFile {
    pub segments: Vec<SegmentSpec>,
}

impl CutsFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::parse(
                format!("line {}, column {}", e.line(), e.column()),
                e.to_string(),
            )
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("cuts serialize");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    /// Segments ready for the sweep; every cut must carry a boundary.
    pub fn to_segments(&self) -> Result<Vec<TopologySegment>> {
        self.segments
            .iter()
            .enumerate()
            .map(|(si, s)| {
                let cuts = s
                    .cuts
                    .iter()
                    .enumerate()
                    .map(|(ci, c)| {
                        let polyline = c.boundary.clone().ok_or_else(|| {
                            Error::InvalidArgument(format!(
                                "segment {} cut {} has no boundary",
                                si + 1,
                                ci + 1
                            ))
                        })?;
                        Ok(CutBoundary {
                            cut: CutLine::new(c.p0, c.p1)?,
                            polyline,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                TopologySegment::new(s.first, s.last, cuts)
            })
            .collect()
    }

    pub fn from_segments(segments: &[TopologySegment]) -> Self {
        CutsFile {
            segments: segments
                .iter()
                .map(|s| SegmentSpec {
                    first: s.first_slice,
                    last: s.last_slice,
                    cuts: s
                        .cuts
                        .iter()
                        .map(|c| CutSpec {
                            p0: c.cut.p0,
                            p1: c.cut.p1,
                            boundary: Some(c.polyline.clone()),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rasterize_polyline;

    fn px(x: i32, y: i32) -> Pixel {
        Pixel::new(x, y)
    }

    fn horizontal_cut() -> CutLine {
        CutLine::new(Point2::new(0.0, 5.0), Point2::new(60.0, 5.0)).unwrap()
    }

    #[test]
    fn clean_crossings() {
        let poly = vec![
            px(10, 0),
            px(10, 1),
            px(11, 2),
            px(12, 2),
            px(13, 2),
            px(14, 2),
            px(15, 2),
        ];
        assert_eq!(row_crossings(&poly, 1, 3), vec![10.0]);
        // long run along the row contributes its two ends
        assert_eq!(row_crossings(&poly, 2, 3), vec![11.0, 15.0]);
    }

    #[test]
    fn wiggle_cluster_uses_median() {
        let cb = CutBoundary {
            cut: horizontal_cut(),
            polyline: vec![px(10, 3), px(11, 4), px(12, 3), px(13, 2), px(40, 3)],
        };
        // separate runs at 10, 12 (and 11 on another row) plus 40
        let poly = vec![
            px(10, 2),
            px(10, 3),
            px(11, 4),
            px(11, 3),
            px(12, 4),
            px(12, 3),
            px(13, 2),
        ];
        assert_eq!(row_crossings(&poly, 3, 3), vec![11.0]);
        let seeds = slice_seeds(
            &CutBoundary {
                polyline: vec![
                    px(10, 3),
                    px(11, 2),
                    px(11, 3),
                    px(12, 4),
                    px(12, 3),
                    px(40, 3),
                ],
                ..cb.clone()
            },
            3,
            3,
        );
        // {10, 11, 12} -> 11 and {40}
        let [a, b] = seeds.unwrap();
        assert_eq!(a, Point2::new(11.0, 5.0));
        assert_eq!(b, Point2::new(40.0, 5.0));
        let three = CutBoundary {
            polyline: vec![
                px(10, 3),
                px(10, 2),
                px(25, 2),
                px(25, 3),
                px(25, 4),
                px(40, 4),
                px(40, 3),
            ],
            ..cb
        };
        assert!(matches!(
            slice_seeds(&three, 3, 3),
            Err(Error::Topology { slice: 3, found: 3 })
        ));
    }

    #[test]
    fn strip_width_examples() {
        assert_eq!(
            strip_width_from_columns(&[vec![10.0, 12.0, 15.0, 14.0]], 1.5).unwrap(),
            5
        );
        assert_eq!(
            strip_width_from_columns(&[vec![7.0, 7.0, 7.0]], 1.1).unwrap(),
            2
        );
        let two = [vec![0.0, 2.0], vec![5.0, 9.0]];
        assert_eq!(strip_width_from_columns(&two, 2.0).unwrap(), 8);
        assert!(strip_width_from_columns(&[vec![3.0]], 1.5).is_err());
    }

    #[test]
    fn strip_width_of_cylinder_cut() {
        let poly = rasterize_polyline(&[px(10, 0), px(10, 4), px(30, 4), px(30, 0)], false);
        let cb = CutBoundary {
            cut: horizontal_cut(),
            polyline: poly,
        };
        let seg = TopologySegment::new(0, 4, vec![cb.clone(), cb.clone()]).unwrap();
        assert_eq!(
            strip_width(&seg, StripParams::new(1.1).unwrap(), 3).unwrap(),
            2
        );
        let flat = CutBoundary {
            cut: horizontal_cut(),
            polyline: vec![px(10, 0), px(11, 0)],
        };
        let seg = TopologySegment::new(0, 0, vec![flat.clone(), flat]).unwrap();
        assert!(strip_width(&seg, StripParams::default(), 3).is_err());
    }

    fn chord(theta_deg: f64, flipped: bool) -> [Point2; 2] {
        let t = theta_deg.to_radians();
        let end = Point2::new(50.0 + 20.0 * t.cos(), 50.0 + 20.0 * t.sin());
        let start = Point2::new(50.0 - 20.0 * t.cos(), 50.0 - 20.0 * t.sin());
        if flipped {
            [end, start]
        } else {
            [start, end]
        }
    }

    #[test]
    fn perpendicular_diameters_are_valid() {
        assert!(check_seed_order(&[chord(0.0, false), chord(90.0, false)]).is_ok());
    }

    #[test]
    fn three_cuts_at_sixty_degrees() {
        let ok = [chord(0.0, false), chord(60.0, false), chord(120.0, false)];
        assert!(check_seed_order(&ok).is_ok());
        let bad = [chord(0.0, false), chord(60.0, true), chord(120.0, false)];
        match check_seed_order(&bad) {
            Err(Error::CutOrdering { cut, .. }) => assert_eq!(cut, 2),
            other => panic!("{other:?}"),
        }
        let bad3 = [chord(0.0, false), chord(60.0, false), chord(120.0, true)];
        assert!(matches!(
            check_seed_order(&bad3),
            Err(Error::CutOrdering { cut: 3, .. })
        ));
    }

    #[test]
    fn cuts_file_round_trip() {
        let text = r#"{"segments":[{"first":0,"last":3,"cuts":[{"p0":[1.0,2.0],"p1":[9.0,2.0],"boundary":[[1,0],[1,1]]},{"p0":[5.0,0.0],"p1":[5.0,8.0]}]}]}"#;
        let f = CutsFile::from_json(text).unwrap();
        assert_eq!(f.segments[0].cuts[1].boundary, None);
        assert_eq!(f.to_json().trim_end(), text);
        assert!(f.to_segments().is_err());
        assert!(CutsFile::from_json("{").is_err());
    }
}
