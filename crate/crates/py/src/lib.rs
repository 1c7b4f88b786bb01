//! Python bindings: images, detectors, synthetic eyes and the hit metrics.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use pupilbench::eval::{self, MethodConfigs, Occlusion, PupilShape, SynthParams};
use pupilbench::imaging::decode;
use pupilbench::rst::RstConfig;
use pupilbench::{Method, Shape};

create_exception!(pupilbench, DetectionError, PyException);

fn value_error(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// 8-bit grayscale image, row-major.
#[pyclass(name = "GrayImage", module = "pupilbench", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyGrayImage(pub pupilbench::GrayImage);

#[pymethods]
impl PyGrayImage {
    #[new]
    fn new(width: usize, height: usize, data: Vec<u8>) -> PyResult<Self> {
        pupilbench::GrayImage::new(width, height, data)
            .map(PyGrayImage)
            .map_err(value_error)
    }

    #[staticmethod]
    fn filled(width: usize, height: usize, value: u8) -> Self {
        PyGrayImage(pupilbench::GrayImage::filled(width, height, value))
    }

    /// Decodes PNG, JPEG or PGM bytes; color input is converted to luminance.
    #[staticmethod]
    fn decode(data: &[u8]) -> PyResult<Self> {
        decode(data).map(PyGrayImage).map_err(value_error)
    }

    #[staticmethod]
    fn open(path: PathBuf) -> PyResult<Self> {
        let bytes = std::fs::read(&path)
            .map_err(|e| PyOSError::new_err(format!("{}: {e}", path.display())))?;
        Self::decode(&bytes)
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    fn get(&self, x: usize, y: usize) -> PyResult<u8> {
        if x >= self.0.width() || y >= self.0.height() {
            return Err(value_error(format!(
                "pixel ({x}, {y}) is outside the image"
            )));
        }
        Ok(self.0.get(x, y))
    }

    fn data<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.0.data())
    }

    fn to_png<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.0.to_png())
    }

    fn to_pgm<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.0.to_pgm())
    }

    fn __repr__(&self) -> String {
        format!("GrayImage({}x{})", self.0.width(), self.0.height())
    }
}

/// Detector output in full-resolution pixel coordinates.
#[pyclass(name = "Detection", module = "pupilbench", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyDetection(pub pupilbench::Detection);

#[pymethods]
impl PyDetection {
    #[getter]
    fn method(&self) -> &'static str {
        self.0.method.as_str()
    }

    #[getter]
    fn cx(&self) -> f64 {
        self.0.cx
    }

    #[getter]
    fn cy(&self) -> f64 {
        self.0.cy
    }

    #[getter]
    fn score(&self) -> f64 {
        self.0.score
    }

    #[getter]
    fn elapsed(&self) -> f64 {
        self.0.elapsed
    }

    /// `None`, or a dict with `type` "circle" (cx, cy, r) or "ellipse"
    /// (cx, cy, a, b, theta).
    #[getter]
    fn shape<'py>(&self, py: Python<'py>) -> PyResult<Option<Bound<'py, PyDict>>> {
        let Some(shape) = self.0.shape else {
            return Ok(None);
        };
        let d = PyDict::new(py);
        match shape {
            Shape::Circle(c) => {
                d.set_item("type", "circle")?;
                d.set_item("cx", c.cx)?;
                d.set_item("cy", c.cy)?;
                d.set_item("r", c.r)?;
            }
            Shape::Ellipse(e) => {
                d.set_item("type", "ellipse")?;
                d.set_item("cx", e.cx)?;
                d.set_item("cy", e.cy)?;
                d.set_item("a", e.a)?;
                d.set_item("b", e.b)?;
                d.set_item("theta", e.theta)?;
            }
        }
        Ok(Some(d))
    }

    fn __repr__(&self) -> String {
        format!(
            "Detection(method={}, cx={:.2}, cy={:.2}, score={:.4})",
            self.0.method, self.0.cx, self.0.cy, self.0.score
        )
    }
}

/// Ground-truth pupil circle.
#[pyclass(
    name = "Annotation",
    module = "pupilbench",
    get_all,
    set_all,
    from_py_object
)]
#[derive(Clone)]
pub struct PyAnnotation {
    cx: f64,
    cy: f64,
    r: f64,
    annotator: String,
    timestamp: i64,
}

impl PyAnnotation {
    fn to_core(&self) -> eval::Annotation {
        eval::Annotation {
            cx: self.cx,
            cy: self.cy,
            r: self.r,
            annotator: self.annotator.clone(),
            timestamp: self.timestamp,
        }
    }

    fn from_core(a: eval::Annotation) -> Self {
        PyAnnotation {
            cx: a.cx,
            cy: a.cy,
            r: a.r,
            annotator: a.annotator,
            timestamp: a.timestamp,
        }
    }
}

#[pymethods]
impl PyAnnotation {
    #[new]
    #[pyo3(signature = (cx, cy, r, annotator = String::new(), timestamp = 0))]
    fn new(cx: f64, cy: f64, r: f64, annotator: String, timestamp: i64) -> Self {
        PyAnnotation {
            cx,
            cy,
            r,
            annotator,
            timestamp,
        }
    }

    /// Raises ValueError unless `r > 0` and the center lies in the image.
    fn validate(&self, width: usize, height: usize) -> PyResult<()> {
        self.to_core().validate(width, height).map_err(value_error)
    }

    fn __repr__(&self) -> String {
        format!("Annotation(cx={}, cy={}, r={})", self.cx, self.cy, self.r)
    }
}

fn parse_method(name: &str) -> PyResult<Method> {
    name.parse().map_err(value_error)
}

fn configs(r_min: usize, r_max: usize, threshold: u8, alpha: f64) -> PyResult<MethodConfigs> {
    if r_min == 0 || r_min > r_max {
        return Err(value_error(format!(
            "need 1 <= r_min <= r_max, got {r_min}..{r_max}"
        )));
    }
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(value_error(format!("alpha must be positive, got {alpha}")));
    }
    let mut c = MethodConfigs::default();
    (c.cht.r_min, c.cht.r_max) = (r_min, r_max);
    (c.ido.r_min, c.ido.r_max) = (r_min, r_max);
    c.ef.threshold = threshold;
    c.ido.threshold = threshold;
    c.rst = RstConfig::with_range(r_min, r_max, alpha);
    Ok(c)
}

/// Runs one detector ("cht", "ef", "ido" or "rst"). Radii are at the
/// quarter-resolution working scale. Raises DetectionError on failure.
#[pyfunction]
#[pyo3(signature = (image, method = "rst", r_min = 5, r_max = 25, threshold = 25, alpha = 2.0))]
fn detect(
    py: Python<'_>,
    image: &PyGrayImage,
    method: &str,
    r_min: usize,
    r_max: usize,
    threshold: u8,
    alpha: f64,
) -> PyResult<PyDetection> {
    let method = parse_method(method)?;
    let cfg = configs(r_min, r_max, threshold, alpha)?;
    let img = image.0.clone();
    py.detach(|| cfg.run(method, &img))
        .map(PyDetection)
        .map_err(|e| DetectionError::new_err(format!("{method}: {e}")))
}

/// Renders a synthetic eye; returns `(image, annotation)`. At most one of
/// `eyelid`, `strokes` and `glints` may be set.
#[pyfunction]
#[pyo3(signature = (
    cx = 320.0, cy = 240.0, r = 40.0, *, ellipse = None, width = 640, height = 480,
    iris_radius = 110.0, eyelid = None, strokes = 0, glints = 0,
    defocus_sigma = 2.0, noise_sigma = 0.0, seed = 0
))]
#[allow(clippy::too_many_arguments)]
fn synth_eye(
    cx: f64,
    cy: f64,
    r: f64,
    ellipse: Option<(f64, f64, f64)>,
    width: usize,
    height: usize,
    iris_radius: f64,
    eyelid: Option<f64>,
    strokes: u32,
    glints: u32,
    defocus_sigma: f64,
    noise_sigma: f64,
    seed: u64,
) -> PyResult<(PyGrayImage, PyAnnotation)> {
    let occlusion = match (eyelid, strokes, glints) {
        (None, 0, 0) => Occlusion::None,
        (Some(f), 0, 0) => Occlusion::Eyelid(f),
        (None, n, 0) => Occlusion::Strokes(n),
        (None, 0, n) => Occlusion::Glints(n),
        _ => return Err(value_error("choose at most one of eyelid, strokes, glints")),
    };
    let pupil = match ellipse {
        Some((a, b, theta)) => PupilShape::Ellipse { a, b, theta },
        None => PupilShape::Circle { r },
    };
    let params = SynthParams {
        width,
        height,
        cx,
        cy,
        pupil,
        iris_radius,
        occlusion,
        defocus_sigma,
        noise_sigma,
        seed,
        ..SynthParams::default()
    };
    let (img, ann) = eval::synth_eye(&params).map_err(value_error)?;
    Ok((PyGrayImage(img), PyAnnotation::from_core(ann)))
}

/// Writes a synthetic corpus with `manifest.json`; returns the image count.
#[pyfunction]
#[pyo3(signature = (out, count, seed = 1, proportions = eval::DEFAULT_PROPORTIONS))]
fn write_corpus(out: PathBuf, count: usize, seed: u64, proportions: [u32; 4]) -> PyResult<usize> {
    if count == 0 || proportions.iter().all(|&w| w == 0) {
        return Err(value_error("need a positive count and a nonzero weight"));
    }
    eval::write_corpus(&out, count, seed, &proportions)
        .map(|m| m.images.len())
        .map_err(value_error)
}

/// Benchmarks methods on a manifest; returns the report as a JSON string.
#[pyfunction]
#[pyo3(signature = (manifest, methods = None, repeat = 1))]
fn benchmark(
    py: Python<'_>,
    manifest: PathBuf,
    methods: Option<Vec<String>>,
    repeat: usize,
) -> PyResult<String> {
    if repeat == 0 {
        return Err(value_error("repeat must be at least 1"));
    }
    let mut methods = match methods {
        Some(names) => names
            .iter()
            .map(|n| parse_method(n))
            .collect::<PyResult<Vec<_>>>()?,
        None => Method::ALL.to_vec(),
    };
    methods.sort();
    methods.dedup();
    let loaded = eval::DatasetManifest::load(&manifest).map_err(value_error)?;
    let base = manifest
        .parent()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    let run = py
        .detach(|| eval::run_benchmark(&loaded, &base, &methods, &MethodConfigs::default(), repeat))
        .map_err(value_error)?;
    String::from_utf8(run.report.to_json()).map_err(value_error)
}

/// `d / R`, or infinity when `detection` is None.
#[pyfunction]
fn relative_error(
    detection: Option<PyRef<'_, PyDetection>>,
    annotation: &PyAnnotation,
) -> PyResult<f64> {
    if annotation.r.is_nan() || annotation.r <= 0.0 {
        return Err(value_error("annotation radius must be positive"));
    }
    Ok(eval::relative_error(
        detection.as_ref().map(|d| &d.0),
        &annotation.to_core(),
    ))
}

#[pyfunction]
fn is_hit(error: f64) -> bool {
    eval::is_hit(error)
}

/// `100 * hits / total` rounded to two decimals, ties to even.
#[pyfunction]
fn rate_percent(hits: usize, total: usize) -> PyResult<f64> {
    if total == 0 || hits > total {
        return Err(value_error("need 0 <= hits <= total and total > 0"));
    }
    Ok(eval::rate_percent(hits, total))
}

/// Hit rate over `(detection or None, annotation)` pairs.
#[pyfunction]
fn hit_rate(results: Vec<(Option<PyDetection>, PyAnnotation)>) -> PyResult<f64> {
    if results.iter().any(|(_, a)| a.r.is_nan() || a.r <= 0.0) {
        return Err(value_error("annotation radius must be positive"));
    }
    let pairs: Vec<(Option<pupilbench::Detection>, eval::Annotation)> = results
        .into_iter()
        .map(|(d, a)| (d.map(|d| d.0), a.to_core()))
        .collect();
    eval::hit_rate(pairs.iter().map(|(d, a)| (d.as_ref(), a))).map_err(value_error)
}

#[pyfunction]
fn average_robustness(category_rates: Vec<f64>) -> PyResult<f64> {
    eval::average_robustness(&category_rates).map_err(value_error)
}

/// Rate over the union of several `(hits, total)` subsets.
#[pyfunction]
fn pooled_rate(counts: Vec<(usize, usize)>) -> PyResult<f64> {
    if counts.iter().any(|&(h, t)| h > t) {
        return Err(value_error("hits cannot exceed total"));
    }
    eval::pooled_rate(&counts).map_err(value_error)
}

#[pymodule]
#[pyo3(name = "pupilbench")]
fn pupilbench_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrayImage>()?;
    m.add_class::<PyDetection>()?;
    m.add_class::<PyAnnotation>()?;
    m.add("DetectionError", m.py().get_type::<DetectionError>())?;
    m.add("METHODS", Method::ALL.map(Method::as_str).to_vec())?;
    m.add("HIT_THRESHOLD", eval::HIT_THRESHOLD)?;
    m.add_function(wrap_pyfunction!(detect, m)?)?;
    m.add_function(wrap_pyfunction!(synth_eye, m)?)?;
    m.add_function(wrap_pyfunction!(write_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(benchmark, m)?)?;
    m.add_function(wrap_pyfunction!(relative_error, m)?)?;
    m.add_function(wrap_pyfunction!(is_hit, m)?)?;
    m.add_function(wrap_pyfunction!(rate_percent, m)?)?;
    m.add_function(wrap_pyfunction!(hit_rate, m)?)?;
    m.add_function(wrap_pyfunction!(average_robustness, m)?)?;
    m.add_function(wrap_pyfunction!(pooled_rate, m)?)?;
    Ok(())
}
