//! Python bindings for the live-wire toolkit.

use std::collections::HashMap;
use std::sync::Arc;

use livewire_core::cost::{static_cost, CostWeights, StaticCostField, TrainedMapping};
use livewire_core::engine::{
    BoundaryEvent, Engine as CoreEngine, EngineConfig, EngineRequest, RequestKind,
};
use livewire_core::eval::{Phantom as CorePhantom, RunResult};
use livewire_core::image_ops::{CutLine as CoreCutLine, FilterSpec};
use livewire_core::lw3d::{CutsFile, SegmentOptions, StripParams};
use livewire_core::mesh::Mesh as CoreMesh;
use livewire_core::{
    ContourSet as CoreContourSet, Error, Image as CoreImage, Mask, Pixel, Point2, SliceContour,
    Volume as CoreVolume,
};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

create_exception!(
    livewire,
    LivewireError,
    PyException,
    "Error raised by the live-wire core."
);

fn err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        e if e.is_validation() => PyValueError::new_err(e.to_string()),
        e => LivewireError::new_err(e.to_string()),
    }
}

type Xy = (i32, i32);

fn pixels(points: &[Xy]) -> Vec<Pixel> {
    points.iter().map(|&(x, y)| Pixel::new(x, y)).collect()
}

fn tuples(points: &[Pixel]) -> Vec<Xy> {
    points.iter().map(|p| (p.x, p.y)).collect()
}

fn weights(w_g: f64, w_l: f64, w_d: f64, w_s: f64, trained: bool) -> PyResult<CostWeights> {
    let mut w = CostWeights::new(w_g, w_l, w_d, w_s).map_err(err)?;
    w.use_training = trained;
    Ok(w)
}

/// 8-bit grayscale image.
#[pyclass(name = "Image", frozen, from_py_object, module = "livewire")]
#[derive(Clone)]
pub struct Image(CoreImage);

#[pymethods]
impl Image {
    #[new]
    fn new(width: usize, height: usize, pixels: Vec<u8>) -> PyResult<Self> {
        CoreImage::new(width, height, pixels)
            .map(Image)
            .map_err(err)
    }

    #[staticmethod]
    fn load_pgm(path: &str) -> PyResult<Self> {
        livewire_core::volume::load_pgm(path)
            .map(Image)
            .map_err(err)
    }

    fn save_pgm(&self, path: &str) -> PyResult<()> {
        livewire_core::volume::save_pgm(&self.0, path).map_err(err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    /// Row-major pixel bytes.
    fn pixels<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.0.pixels())
    }

    fn get(&self, x: usize, y: usize) -> PyResult<u8> {
        if x >= self.0.width() || y >= self.0.height() {
            return Err(err(Error::PointOutOfBounds {
                x: x as f64,
                y: y as f64,
            }));
        }
        Ok(self.0.get(x, y))
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("Image({}x{})", self.0.width(), self.0.height())
    }
}

/// Stack of equally sized slices.
#[pyclass(name = "Volume", frozen, from_py_object, module = "livewire")]
#[derive(Clone)]
pub struct Volume(CoreVolume);

#[pymethods]
impl Volume {
    #[new]
    fn new(width: usize, height: usize, depth: usize, voxels: Vec<u8>) -> PyResult<Self> {
        CoreVolume::new(width, height, depth, voxels)
            .map(Volume)
            .map_err(err)
    }

    /// Loads an LWV1 volume or a PGM slice manifest.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        livewire_core::volume::load_volume(path)
            .map(Volume)
            .map_err(err)
    }

    #[staticmethod]
    fn from_slices(slices: Vec<Image>) -> PyResult<Self> {
        let imgs: Vec<CoreImage> = slices.into_iter().map(|i| i.0).collect();
        CoreVolume::from_slices(&imgs).map(Volume).map_err(err)
    }

    fn save_lwv1(&self, path: &str) -> PyResult<()> {
        livewire_core::volume::save_lwv1(&self.0, path).map_err(err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    #[getter]
    fn depth(&self) -> usize {
        self.0.depth()
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.0.spacing
    }

    fn with_spacing(&self, spacing: f64) -> PyResult<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(PyValueError::new_err(format!(
                "spacing must be positive, got {spacing}"
            )));
        }
        let mut v = self.0.clone();
        v.spacing = spacing;
        Ok(Volume(v))
    }

    fn slice(&self, index: usize) -> PyResult<Image> {
        self.0.slice_of(index).map(Image).map_err(err)
    }

    fn voxels<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.0.voxels())
    }

    fn __repr__(&self) -> String {
        format!(
            "Volume({}x{}x{})",
            self.0.width(),
            self.0.height(),
            self.0.depth()
        )
    }
}

/// Gradient-bin to cost table learned from boundary samples.
#[pyclass(name = "TrainedMapping", frozen, from_py_object, module = "livewire")]
#[derive(Clone)]
pub struct TrainedMappingPy(TrainedMapping);

#[pymethods]
impl TrainedMappingPy {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        TrainedMapping::from_text(text)
            .map(TrainedMappingPy)
            .map_err(err)
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }

    fn table(&self) -> Vec<u8> {
        self.0.table().to_vec()
    }

    fn get(&self, bin: u8) -> u8 {
        self.0.get(bin)
    }
}

/// Learns a mapping from gradient bins sampled on a boundary.
#[pyfunction]
fn train_mapping(samples: Vec<u8>) -> PyResult<TrainedMappingPy> {
    livewire_core::cost::train_mapping(&samples)
        .map(TrainedMappingPy)
        .map_err(err)
}

/// Static per-pixel costs of one image, with the weights that built it.
#[pyclass(name = "CostField", frozen, module = "livewire")]
pub struct CostField {
    field: Arc<StaticCostField>,
    weights: CostWeights,
}

#[pymethods]
impl CostField {
    #[new]
    #[pyo3(signature = (image, w_g=0.5, w_l=0.5, w_d=0.0, w_s=0.0, mapping=None))]
    fn new(
        image: &Image,
        w_g: f64,
        w_l: f64,
        w_d: f64,
        w_s: f64,
        mapping: Option<&TrainedMappingPy>,
    ) -> PyResult<Self> {
        let weights = weights(w_g, w_l, w_d, w_s, mapping.is_some())?;
        let field = static_cost(&image.0, &weights, mapping.map(|m| &m.0)).map_err(err)?;
        Ok(CostField {
            field: Arc::new(field),
            weights,
        })
    }

    #[getter]
    fn width(&self) -> usize {
        self.field.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.field.height()
    }

    fn cost(&self, x: i32, y: i32) -> PyResult<u8> {
        let p = Pixel::new(x, y);
        if !self.field.contains(p) {
            return Err(err(Error::PointOutOfBounds {
                x: x as f64,
                y: y as f64,
            }));
        }
        Ok(self.field.cost(p))
    }

    fn costs<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.field.costs())
    }

    fn to_image(&self) -> Image {
        Image(self.field.to_image())
    }

    /// Gradient bins under the given pixels, for training.
    fn training_samples(&self, points: Vec<Xy>) -> Vec<u8> {
        let mask = Mask::from_pixels(self.field.width(), self.field.height(), pixels(&points));
        self.field.training_samples(&mask)
    }
}

fn event_dict<'py>(py: Python<'py>, ev: &BoundaryEvent) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("seq", ev.seq())?;
    match ev {
        BoundaryEvent::WireUpdated { points, .. } => {
            d.set_item("type", "wire")?;
            d.set_item("points", tuples(points))?;
        }
        BoundaryEvent::SegmentCommitted { points, .. } => {
            d.set_item("type", "segment_committed")?;
            d.set_item("points", tuples(points))?;
        }
        BoundaryEvent::AutoSeed { pixel, .. } => {
            d.set_item("type", "auto_seed")?;
            d.set_item("x", pixel.x)?;
            d.set_item("y", pixel.y)?;
        }
        BoundaryEvent::BoundaryClosed { points, .. } => {
            d.set_item("type", "boundary_closed")?;
            d.set_item("points", tuples(points))?;
        }
        BoundaryEvent::SearchComplete { .. } => d.set_item("type", "search_complete")?,
        BoundaryEvent::Error { code, message, .. } => {
            d.set_item("type", "error")?;
            d.set_item("code", format!("{code:?}"))?;
            d.set_item("message", message)?;
        }
    }
    Ok(d)
}

/// Interactive live-wire on one cost field. Each call returns the events it
/// caused as dictionaries; `now` is a time in milliseconds for cooling and
/// heating.
#[pyclass(name = "Engine", unsendable, module = "livewire")]
pub struct Engine {
    inner: CoreEngine,
    seq: u64,
}

impl Engine {
    fn request<'py>(
        &mut self,
        py: Python<'py>,
        kind: RequestKind,
        now: u64,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.seq += 1;
        let events = self.inner.handle(EngineRequest::new(self.seq, kind), now);
        events.iter().map(|e| event_dict(py, e)).collect()
    }
}

#[pymethods]
impl Engine {
    #[new]
    #[pyo3(signature = (field, freeze_after=None, heat_period=None))]
    fn new(
        field: &CostField,
        freeze_after: Option<u64>,
        heat_period: Option<u64>,
    ) -> PyResult<Self> {
        let config = EngineConfig {
            weights: field.weights.clone(),
            freeze_after,
            heat_period,
        };
        let inner = CoreEngine::new(field.field.clone(), config).map_err(err)?;
        Ok(Engine { inner, seq: 0 })
    }

    #[pyo3(signature = (x, y, now=0))]
    fn set_seed<'py>(
        &mut self,
        py: Python<'py>,
        x: i32,
        y: i32,
        now: u64,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.request(py, RequestKind::SetSeed(Pixel::new(x, y)), now)
    }

    #[pyo3(signature = (x, y, now=0))]
    fn set_target<'py>(
        &mut self,
        py: Python<'py>,
        x: i32,
        y: i32,
        now: u64,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.request(py, RequestKind::SetTarget(Pixel::new(x, y)), now)
    }

    #[pyo3(signature = (now=0))]
    fn commit<'py>(&mut self, py: Python<'py>, now: u64) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.request(py, RequestKind::Commit, now)
    }

    #[pyo3(signature = (now=0))]
    fn close<'py>(&mut self, py: Python<'py>, now: u64) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.request(py, RequestKind::Close, now)
    }

    #[pyo3(signature = (now=0))]
    fn heat<'py>(&mut self, py: Python<'py>, now: u64) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.request(py, RequestKind::HeatStep, now)
    }

    #[pyo3(signature = (now=0))]
    fn cancel<'py>(&mut self, py: Python<'py>, now: u64) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.request(py, RequestKind::Cancel, now)
    }

    fn tick<'py>(&mut self, py: Python<'py>, now: u64) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let events = self.inner.tick(now);
        events.iter().map(|e| event_dict(py, e)).collect()
    }

    fn wire(&self) -> Option<Vec<Xy>> {
        self.inner.wire().map(tuples)
    }

    fn boundary(&self) -> Vec<Xy> {
        tuples(&self.inner.boundary().points())
    }

    #[getter]
    fn closed(&self) -> bool {
        self.inner.boundary().is_closed()
    }
}

/// Straight line across the slice plane defining an orthogonal cut.
#[pyclass(name = "CutLine", frozen, from_py_object, module = "livewire")]
#[derive(Clone)]
pub struct CutLine(CoreCutLine);

#[pymethods]
impl CutLine {
    #[new]
    fn new(p0: (f64, f64), p1: (f64, f64)) -> PyResult<Self> {
        CoreCutLine::new(Point2::new(p0.0, p0.1), Point2::new(p1.0, p1.1))
            .map(CutLine)
            .map_err(err)
    }

    #[getter]
    fn length(&self) -> f64 {
        self.0.length()
    }

    #[getter]
    fn sample_count(&self) -> usize {
        self.0.sample_count()
    }

    fn point_at(&self, s: f64) -> (f64, f64) {
        let p = self.0.point_at(s);
        (p.x, p.y)
    }
}

/// Resamples `volume` along `cut`; row `k` is slice `k`.
#[pyfunction]
fn orthogonal_cut(volume: &Volume, cut: &CutLine) -> PyResult<Image> {
    livewire_core::image_ops::build_orthogonal_cut(&volume.0, &cut.0)
        .map(Image)
        .map_err(err)
}

/// Filters `image`, optionally only inside the `region` pixels.
#[pyfunction]
#[pyo3(signature = (image, kind, params=None, region=None))]
fn apply_filter(
    image: &Image,
    kind: &str,
    params: Option<HashMap<String, f64>>,
    region: Option<Vec<Xy>>,
) -> PyResult<Image> {
    let mut params: Vec<(String, f64)> = params.unwrap_or_default().into_iter().collect();
    params.sort_by(|a, b| a.0.cmp(&b.0));
    let spec = FilterSpec::from_params(kind, &params).map_err(err)?;
    let mask = region.map(|r| Mask::from_pixels(image.0.width(), image.0.height(), pixels(&r)));
    livewire_core::image_ops::apply_filter(&image.0, &spec, mask.as_ref())
        .map(Image)
        .map_err(err)
}

/// Per-slice closed contours grouped into constant-topology segments.
#[pyclass(name = "ContourSet", frozen, from_py_object, module = "livewire")]
#[derive(Clone)]
pub struct ContourSet(CoreContourSet);

#[pymethods]
impl ContourSet {
    #[new]
    #[pyo3(signature = (slices, segments, spacing=1.0))]
    fn new(
        slices: Vec<(usize, Vec<Xy>)>,
        segments: Vec<(usize, usize)>,
        spacing: f64,
    ) -> PyResult<Self> {
        let c = CoreContourSet {
            spacing,
            segments: segments.into_iter().map(|(a, b)| [a, b]).collect(),
            slices: slices
                .into_iter()
                .map(|(index, pts)| SliceContour {
                    index,
                    contour: pixels(&pts),
                })
                .collect(),
        };
        c.validate().map_err(err)?;
        Ok(ContourSet(c))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        CoreContourSet::from_json(text).map(ContourSet).map_err(err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        livewire_core::volume::load_contours(path)
            .map(ContourSet)
            .map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn save(&self, path: &str) -> PyResult<()> {
        livewire_core::volume::save_contours(&self.0, path).map_err(err)
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.0.spacing
    }

    #[getter]
    fn segments(&self) -> Vec<(usize, usize)> {
        self.0.segments.iter().map(|s| (s[0], s[1])).collect()
    }

    #[getter]
    fn indices(&self) -> Vec<usize> {
        self.0.slices.iter().map(|s| s.index).collect()
    }

    fn contour(&self, slice: usize) -> Option<Vec<Xy>> {
        self.0.contour(slice).map(tuples)
    }

    fn __len__(&self) -> usize {
        self.0.slices.len()
    }
}

/// Segments `volume` from a cuts file (JSON text with cut boundaries).
#[pyfunction]
#[pyo3(signature = (volume, cuts_json, safety=1.5, w_g=0.5, w_l=0.5, w_d=0.0, w_s=0.0, mapping=None, use_strip=true))]
#[allow(clippy::too_many_arguments)]
fn segment_volume(
    py: Python<'_>,
    volume: &Volume,
    cuts_json: &str,
    safety: f64,
    w_g: f64,
    w_l: f64,
    w_d: f64,
    w_s: f64,
    mapping: Option<&TrainedMappingPy>,
    use_strip: bool,
) -> PyResult<ContourSet> {
    let segments = CutsFile::from_json(cuts_json)
        .and_then(|f| f.to_segments())
        .map_err(err)?;
    let w = weights(w_g, w_l, w_d, w_s, mapping.is_some())?;
    let opts = SegmentOptions {
        strip: StripParams::new(safety).map_err(err)?,
        use_strip,
        ..SegmentOptions::default()
    };
    let mapping = mapping.map(|m| m.0.clone());
    let v = volume.0.clone();
    py.detach(move || {
        livewire_core::lw3d::segment_volume(&v, &segments, &w, mapping.as_ref(), &opts)
    })
    .map(|r| ContourSet(r.contours))
    .map_err(err)
}

/// Triangle mesh of a contour stack.
#[pyclass(name = "Mesh", frozen, module = "livewire")]
pub struct Mesh(CoreMesh);

#[pymethods]
impl Mesh {
    #[getter]
    fn vertices(&self) -> Vec<(f64, f64, f64)> {
        self.0.vertices.iter().map(|v| (v[0], v[1], v[2])).collect()
    }

    #[getter]
    fn triangles(&self) -> Vec<(usize, usize, usize)> {
        self.0
            .triangles
            .iter()
            .map(|t| (t[0], t[1], t[2]))
            .collect()
    }

    #[pyo3(signature = (eps=1e-12))]
    fn degenerate_triangles(&self, eps: f64) -> usize {
        self.0.degenerate_triangles(eps)
    }

    fn to_obj(&self) -> String {
        self.0.to_obj()
    }

    fn save_obj(&self, path: &str) -> PyResult<()> {
        self.0.save_obj(path).map_err(err)
    }
}

#[pyfunction]
#[pyo3(signature = (contours, samples=64, arc_window=None))]
fn reconstruct(contours: &ContourSet, samples: usize, arc_window: Option<f64>) -> PyResult<Mesh> {
    let frac = arc_window.unwrap_or_else(|| livewire_core::mesh::default_arc_window_frac(samples));
    livewire_core::mesh::reconstruct(&contours.0, samples, frac)
        .map(Mesh)
        .map_err(err)
}

/// Mean chamfer distance (pixels) from the pixels of contour `b` to contour `a`.
#[pyfunction]
fn contour_error(a: Vec<Xy>, b: Vec<Xy>, width: usize, height: usize) -> PyResult<f64> {
    livewire_core::eval::contour_error(&pixels(&a), &pixels(&b), width, height).map_err(err)
}

fn runs(sets: Vec<ContourSet>) -> Vec<RunResult> {
    sets.into_iter()
        .enumerate()
        .map(|(i, c)| RunResult {
            id: format!("run{i}"),
            contours: c.0,
            slice_times_ms: Vec::new(),
            seed_count: 0,
            auto_corrections: 0,
        })
        .collect()
}

/// Mean pairwise contour error of several runs on one slice.
#[pyfunction]
fn mutual_error(
    runs_: Vec<ContourSet>,
    slice: usize,
    width: usize,
    height: usize,
) -> PyResult<f64> {
    livewire_core::eval::mutual_error(&runs(runs_), slice, width, height).map_err(err)
}

/// Standard deviation of the pairwise contour errors on one slice.
#[pyfunction]
fn repeatability(
    runs_: Vec<ContourSet>,
    slice: usize,
    width: usize,
    height: usize,
) -> PyResult<f64> {
    livewire_core::eval::repeatability(&runs(runs_), slice, width, height).map_err(err)
}

/// Chamfer distance transform (tenths of a pixel) of a pixel set, row-major.
#[pyfunction]
fn chamfer_dt(points: Vec<Xy>, width: usize, height: usize) -> PyResult<Vec<u32>> {
    livewire_core::lw3d::polyline_dt(&pixels(&points), width, height)
        .map(|d| d.values().to_vec())
        .map_err(err)
}

/// Synthetic volume with a known boundary on every slice.
#[pyclass(name = "Phantom", frozen, module = "livewire")]
pub struct Phantom(CorePhantom);

#[pymethods]
impl Phantom {
    #[staticmethod]
    fn cylinder(size: usize, depth: usize, radius: f64) -> Self {
        Phantom(CorePhantom::cylinder(size, depth, radius))
    }

    #[staticmethod]
    fn cone(size: usize, depth: usize, radius: f64, shrink_per_slice: f64) -> Self {
        Phantom(CorePhantom::cone(size, depth, radius, shrink_per_slice))
    }

    #[staticmethod]
    fn ellipsoid(size: usize, depth: usize, radii: (f64, f64, f64)) -> Self {
        Phantom(CorePhantom::ellipsoid(
            size,
            depth,
            [radii.0, radii.1, radii.2],
        ))
    }

    #[staticmethod]
    fn two_edge_plate(width: usize, height: usize, weak_edge: usize) -> Self {
        Phantom(CorePhantom::two_edge_plate(width, height, weak_edge))
    }

    fn with_noise(&self, sigma: f64, seed: u64) -> Self {
        Phantom(self.0.clone().with_noise(sigma, seed))
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height
    }

    #[getter]
    fn depth(&self) -> usize {
        self.0.depth
    }

    fn volume(&self) -> PyResult<Volume> {
        self.0.volume().map(Volume).map_err(err)
    }

    /// Rasterized true boundary of a slice.
    fn ground_truth(&self, slice: usize) -> Vec<Xy> {
        tuples(&self.0.ground_truth(slice).rasterize())
    }

    /// True boundary in the image of `cut` between two slices.
    fn cut_boundary(&self, cut: &CutLine, first: usize, last: usize) -> PyResult<Vec<Xy>> {
        self.0
            .cut_boundary(&cut.0, first, last)
            .map(|p| tuples(&p))
            .map_err(err)
    }
}

#[pymodule]
fn livewire(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("LivewireError", m.py().get_type::<LivewireError>())?;
    m.add_class::<Image>()?;
    m.add_class::<Volume>()?;
    m.add_class::<TrainedMappingPy>()?;
    m.add_class::<CostField>()?;
    m.add_class::<Engine>()?;
    m.add_class::<CutLine>()?;
    m.add_class::<ContourSet>()?;
    m.add_class::<Mesh>()?;
    m.add_class::<Phantom>()?;
    m.add_function(wrap_pyfunction!(train_mapping, m)?)?;
    m.add_function(wrap_pyfunction!(orthogonal_cut, m)?)?;
    m.add_function(wrap_pyfunction!(apply_filter, m)?)?;
    m.add_function(wrap_pyfunction!(segment_volume, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(contour_error, m)?)?;
    m.add_function(wrap_pyfunction!(mutual_error, m)?)?;
    m.add_function(wrap_pyfunction!(repeatability, m)?)?;
    m.add_function(wrap_pyfunction!(chamfer_dt, m)?)?;
    Ok(())
}
