//! Volumes, slices and the on-disk formats: LWV1 text volumes, PGM stacks
//! listed in a manifest, and contour-set JSON.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Pixel;

/// A stack of equally sized 8-bit slices imaged in parallel planes.
#[derive(Clone, Debug, PartialEq)]
pub struct Volume {
    width: usize,
    height: usize,
    depth: usize,
    /// Slice-to-slice distance in pixel units.
    pub spacing: f64,
    voxels: Vec<u8>,
}

impl Volume {
    pub fn new(width: usize, height: usize, depth: usize, voxels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || depth == 0 {
            return Err(Error::InvalidArgument(format!(
                "volume dimensions {width}x{height}x{depth} must be positive"
            )));
        }
        if voxels.len() != width * height * depth {
            return Err(Error::InvalidArgument(format!(
                "expected {} voxels, got {}",
                width * height * depth,
                voxels.len()
            )));
        }
        Ok(Volume {
            width,
            height,
            depth,
            spacing: 1.0,
            voxels,
        })
    }

    pub fn from_slices(slices: &[Image]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::InvalidArgument("no slices".into()))?;
        let (w, h) = (first.width(), first.height());
        let mut voxels = Vec::with_capacity(w * h * slices.len());
        for (k, s) in slices.iter().enumerate() {
            if s.width() != w || s.height() != h {
                return Err(Error::InvalidArgument(format!(
                    "slice {k} is {}x{}, expected {w}x{h}",
                    s.width(),
                    s.height()
                )));
            }
            voxels.extend_from_slice(s.pixels());
        }
        Volume::new(w, h, slices.len(), voxels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn voxels(&self) -> &[u8] {
        &self.voxels
    }

    pub fn voxel(&self, x: usize, y: usize, z: usize) -> u8 {
        self.voxels[(z * self.height + y) * self.width + x]
    }

    /// Copy of slice `k`.
    pub fn slice_of(&self, k: usize) -> Result<Image> {
        if k >= self.depth {
            return Err(Error::IndexOutOfRange {
                index: k,
                len: self.depth,
            });
        }
        let n = self.width * self.height;
        Ok(Image {
            width: self.width,
            height: self.height,
            pixels: self.voxels[k * n..(k + 1) * n].to_vec(),
        })
    }

    pub fn slices(&self) -> impl Iterator<Item = Image> + '_ {
        (0..self.depth).map(move |k| self.slice_of(k).expect("in range"))
    }
}

/// A single 8-bit grayscale plane.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height || width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "image {width}x{height} needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Image {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Image {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Image {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    /// Pixel value with edge replication outside the image.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.pixels[y * self.width + x]
    }

    pub fn contains(&self, p: Pixel) -> bool {
        p.x >= 0 && p.y >= 0 && (p.x as usize) < self.width && (p.y as usize) < self.height
    }

    pub(crate) fn ensure_livewire_domain(&self) -> Result<()> {
        if self.width < 3 || self.height < 3 {
            return Err(Error::ImageTooSmall {
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// LWV1

/// Parses the LWV1 text format.
pub fn parse_lwv1(text: &str) -> Result<Volume> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| Error::parse("line 1", "empty file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "LWV1" {
        return Err(Error::parse(
            "line 1",
            format!("expected `LWV1 <width> <height> <depth>`, got `{header}`"),
        ));
    }
    let dim = |i: usize, name: &str| -> Result<usize> {
        fields[i]
            .parse::<usize>()
            .map_err(|_| Error::parse("line 1", format!("bad {name} `{}`", fields[i])))
    };
    let (w, h, d) = (dim(1, "width")?, dim(2, "height")?, dim(3, "depth")?);
    if w == 0 || h == 0 || d == 0 {
        return Err(Error::parse(
            "line 1",
            format!("dimensions {w}x{h}x{d} must be positive"),
        ));
    }
    let expected = w * h * d;
    let mut voxels = Vec::with_capacity(expected);
    let mut last_line = 1;
    for (i, line) in lines {
        last_line = i + 1;
        for (col, tok) in line.split_whitespace().enumerate() {
            let location = format!("line {}, value {}", i + 1, col + 1);
            let v: i64 = tok
                .parse()
                .map_err(|_| Error::parse(location.clone(), format!("not an integer: `{tok}`")))?;
            if !(0..=255).contains(&v) {
                return Err(Error::parse(
                    location,
                    format!("intensity {v} outside [0, 255]"),
                ));
            }
            if voxels.len() == expected {
                return Err(Error::parse(location, "trailing data after the last slice"));
            }
            voxels.push(v as u8);
        }
    }
    if voxels.len() != expected {
        return Err(Error::parse(
            format!("line {last_line}, offset {}", voxels.len()),
            format!(
                "truncated data: expected {expected} values, found {}",
                voxels.len()
            ),
        ));
    }
    Volume::new(w, h, d, voxels)
}

pub fn format_lwv1(v: &Volume) -> String {
    let mut out = String::with_capacity(v.voxels.len() * 4 + 32);
    let _ = writeln!(out, "LWV1 {} {} {}", v.width, v.height, v.depth);
    for row in v.voxels.chunks(v.width) {
        let mut first = true;
        for &val in row {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{val}");
        }
        out.push('\n');
    }
    out
}

pub fn save_lwv1(v: &Volume, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_lwv1(v)).map_err(|e| Error::io(path, e))
}

/// Loads an LWV1 file, or a manifest listing one PGM path per line.
pub fn load_volume(path: impl AsRef<Path>) -> Result<Volume> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::parse(path.display().to_string(), "not a text file"))?;
    if text.trim_start().starts_with("LWV1") {
        parse_lwv1(&text)
    } else {
        load_manifest(path, &text)
    }
}

fn load_manifest(path: &Path, text: &str) -> Result<Volume> {
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut slices = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let entry = line.trim();
        if entry.is_empty() {
            continue;
        }
        let p = PathBuf::from(entry);
        let p = if p.is_absolute() { p } else { base.join(p) };
        let img = load_pgm(&p).map_err(|e| match e {
            Error::Parse { location, message } => Error::Parse {
                location: format!("{} (manifest line {}): {location}", p.display(), i + 1),
                message,
            },
            other => other,
        })?;
        if let Some(first) = slices.first() {
            let first: &Image = first;
            if first.width() != img.width() || first.height() != img.height() {
                return Err(Error::parse(
                    format!("manifest line {}", i + 1),
                    format!(
                        "slice is {}x{}, expected {}x{}",
                        img.width(),
                        img.height(),
                        first.width(),
                        first.height()
                    ),
                ));
            }
        }
        slices.push(img);
    }
    if slices.is_empty() {
        return Err(Error::parse(
            path.display().to_string(),
            "manifest lists no slices",
        ));
    }
    Volume::from_slices(&slices)
}

// ---------------------------------------------------------------------------
// PGM

/// Parses binary (P5) or plain (P2) PGM with maxval <= 255. Values are kept as stored.
pub fn parse_pgm(bytes: &[u8]) -> Result<Image> {
    let mut pos = 0usize;
    let next_token = |pos: &mut usize| -> Result<String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(Error::parse(
                format!("offset {start}"),
                "unexpected end of file",
            ));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };
    let magic = next_token(&mut pos)?;
    let binary = match magic.as_str() {
        "P5" => true,
        "P2" => false,
        other => {
            return Err(Error::parse(
                "offset 0",
                format!("unsupported PGM magic `{other}`"),
            ))
        }
    };
    let header_num = |pos: &mut usize, name: &str| -> Result<usize> {
        let at = *pos;
        let t = next_token(pos)?;
        t.parse()
            .map_err(|_| Error::parse(format!("offset {at}"), format!("bad {name} `{t}`")))
    };
    let w = header_num(&mut pos, "width")?;
    let h = header_num(&mut pos, "height")?;
    let maxval = header_num(&mut pos, "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::parse(
            format!("offset {pos}"),
            format!("maxval {maxval} unsupported (8-bit only)"),
        ));
    }
    let n = w * h;
    let pixels = if binary {
        pos += 1; // single whitespace after maxval
        if bytes.len() < pos + n {
            return Err(Error::parse(
                format!("offset {}", bytes.len()),
                format!(
                    "truncated data: expected {n} bytes, found {}",
                    bytes.len().saturating_sub(pos)
                ),
            ));
        }
        let px = bytes[pos..pos + n].to_vec();
        if let Some(i) = px.iter().position(|&v| v as usize > maxval) {
            return Err(Error::parse(
                format!("offset {}", pos + i),
                "value exceeds maxval",
            ));
        }
        px
    } else {
        let mut px = Vec::with_capacity(n);
        for _ in 0..n {
            let at = pos;
            let t = next_token(&mut pos).map_err(|_| {
                Error::parse(
                    format!("offset {at}"),
                    format!("truncated data: expected {n} values, found {}", px.len()),
                )
            })?;
            let v: usize = t.parse().map_err(|_| {
                Error::parse(format!("offset {at}"), format!("not an integer `{t}`"))
            })?;
            if v > maxval {
                return Err(Error::parse(
                    format!("offset {at}"),
                    format!("value {v} exceeds maxval {maxval}"),
                ));
            }
            px.push(v as u8);
        }
        px
    };
    Image::new(w, h, pixels)
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes)
}

/// Binary (P5) encoding.
pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

/// Plain (P2) encoding.
pub fn encode_pgm_ascii(img: &Image) -> String {
    let mut out = format!("P2\n{} {}\n255\n", img.width, img.height);
    for row in img.pixels.chunks(img.width) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn save_pgm(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Contours

/// A closed boundary on one slice. The polygon is implicitly closed: the
/// last point connects back to the first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceContour {
    pub index: usize,
    pub contour: Vec<Pixel>,
}

/// Per-slice closed boundaries grouped into constant-topology segments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourSet {
    pub spacing: f64,
    /// Inclusive `[first, last]` slice ranges.
    pub segments: Vec<[usize; 2]>,
    pub slices: Vec<SliceContour>,
}

impl Default for ContourSet {
    fn default() -> Self {
        ContourSet {
            spacing: 1.0,
            segments: Vec::new(),
            slices: Vec::new(),
        }
    }
}

impl ContourSet {
    pub fn validate(&self) -> Result<()> {
        if !self.spacing.is_finite() || self.spacing <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "bad spacing {}",
                self.spacing
            )));
        }
        for w in self.slices.windows(2) {
            if w[1].index <= w[0].index {
                return Err(Error::InvalidArgument(format!(
                    "slice indices not strictly increasing ({} then {})",
                    w[0].index, w[1].index
                )));
            }
        }
        for (i, s) in self.segments.iter().enumerate() {
            if s[0] > s[1] {
                return Err(Error::InvalidArgument(format!(
                    "segment {i} has first > last"
                )));
            }
            if i > 0 && s[0] <= self.segments[i - 1][1] {
                return Err(Error::InvalidArgument(format!(
                    "segment {i} overlaps or precedes segment {}",
                    i - 1
                )));
            }
        }
        Ok(())
    }

    pub fn contour(&self, slice: usize) -> Option<&[Pixel]> {
        self.slices
            .iter()
            .find(|s| s.index == slice)
            .map(|s| s.contour.as_slice())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("contour set serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: ContourSet = serde_json::from_str(text).map_err(|e| {
            Error::parse(
                format!("line {}, column {}", e.line(), e.column()),
                e.to_string(),
            )
        })?;
        c.validate()?;
        Ok(c)
    }
}

pub fn save_contours(c: &ContourSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    c.validate()?;
    fs::write(path, c.to_json()).map_err(|e| Error::io(path, e))
}

pub fn load_contours(path: impl AsRef<Path>) -> Result<ContourSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ContourSet::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lwv1_small_example() {
        let v = parse_lwv1("LWV1 3 2 1\n0 1 2\n3 4 5\n").unwrap();
        assert_eq!((v.width(), v.height(), v.depth()), (3, 2, 1));
        assert_eq!(v.voxel(2, 1, 0), 5);
        let err = parse_lwv1("LWV1 3 2 1\n0 1 2\n3 4\n").unwrap_err();
        assert!(err.to_string().contains("truncated"));
    }

    #[test]
    fn lwv1_reads_declared_dimensions() {
        let v = parse_lwv1("LWV1 3 3 1\n0 1 2\n3 4 5\n6 7 8\n").unwrap();
        assert_eq!((v.width(), v.height(), v.depth()), (3, 3, 1));
        assert_eq!(v.voxel(2, 1, 0), 5);
        assert_eq!(v.spacing, 1.0);
    }

    #[test]
    fn lwv1_truncated_reports_location() {
        let err = parse_lwv1("LWV1 3 3 1\n0 1 2\n3 4 5\n6 7\n").unwrap_err();
        match err {
            Error::Parse { location, message } => {
                assert!(message.contains("truncated"), "{message}");
                assert!(location.contains("line 4"), "{location}");
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn lwv1_rejects_out_of_range_intensity() {
        let err = parse_lwv1("LWV1 3 3 1\n0 1 2\n3 256 5\n6 7 8\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3") && msg.contains("256"), "{msg}");
        assert!(parse_lwv1("LWV1 3 3 1\n0 1 2\n3 -1 5\n6 7 8\n").is_err());
    }

    #[test]
    fn lwv1_rejects_bad_header_and_trailing_data() {
        assert!(parse_lwv1("LWV2 3 3 1\n").is_err());
        assert!(parse_lwv1("LWV1 3 3\n").is_err());
        assert!(parse_lwv1("LWV1 3 3 1\n0 0 0\n0 0 0\n0 0 0\n9\n").is_err());
    }

    #[test]
    fn slice_of_copies() {
        let v = Volume::new(3, 3, 2, (0..18).collect()).unwrap();
        let mut s = v.slice_of(1).unwrap();
        assert_eq!(s.get(0, 0), 9);
        s.set(0, 0, 200);
        assert_eq!(v.voxel(0, 0, 1), 9);
        assert!(matches!(
            v.slice_of(2),
            Err(Error::IndexOutOfRange { index: 2, len: 2 })
        ));
    }

    #[test]
    fn uniform_volume_slices_are_uniform() {
        let v = Volume::new(4, 4, 3, vec![7; 48]).unwrap();
        assert!(v.slice_of(2).unwrap().pixels().iter().all(|&p| p == 7));
        let single = Volume::new(4, 3, 1, (0..12).collect()).unwrap();
        assert_eq!(single.slice_of(0).unwrap().pixels(), single.voxels());
    }

    #[test]
    fn pgm_plain_and_binary_agree() {
        let img = Image::from_fn(5, 4, |x, y| (x * 40 + y * 3) as u8);
        let a = parse_pgm(encode_pgm_ascii(&img).as_bytes()).unwrap();
        let b = parse_pgm(&encode_pgm(&img)).unwrap();
        assert_eq!(a, img);
        assert_eq!(b, img);
    }

    #[test]
    fn pgm_with_comments_and_truncation() {
        let img = parse_pgm(b"P2\n# comment\n3 3\n# another\n255\n1 2 3\n4 5 6\n7 8 9\n").unwrap();
        assert_eq!(img.get(2, 2), 9);
        assert!(parse_pgm(b"P2\n3 3\n255\n1 2 3\n").is_err());
        assert!(parse_pgm(b"P5\n3 3\n255\n\x01\x02").is_err());
    }

    #[test]
    fn empty_contour_set_round_trips() {
        let c = ContourSet::default();
        let back = ContourSet::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert!(c.to_json().contains("\"slices\":[]"));
    }

    #[test]
    fn triangle_contour_round_trips() {
        let c = ContourSet {
            spacing: 2.5,
            segments: vec![[0, 0]],
            slices: vec![SliceContour {
                index: 0,
                contour: vec![Pixel::new(1, 1), Pixel::new(5, 1), Pixel::new(3, 4)],
            }],
        };
        let json = c.to_json();
        assert_eq!(
            json,
            "{\"spacing\":2.5,\"segments\":[[0,0]],\"slices\":[{\"index\":0,\"contour\":[[1,1],[5,1],[3,4]]}]}\n"
        );
        assert_eq!(ContourSet::from_json(&json).unwrap(), c);
    }

    #[test]
    fn contour_schema_violations_rejected() {
        assert!(ContourSet::from_json("{\"spacing\":1.0}").is_err());
        let unordered = r#"{"spacing":1.0,"segments":[],"slices":[{"index":2,"contour":[]},{"index":1,"contour":[]}]}"#;
        assert!(ContourSet::from_json(unordered).is_err());
        let overlapping = r#"{"spacing":1.0,"segments":[[0,3],[3,5]],"slices":[]}"#;
        assert!(ContourSet::from_json(overlapping).is_err());
    }
}
