//! Python bindings. Polygons cross the boundary as lists of `(x, y)` tuples.

use std::collections::HashMap;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use uht_core::datasets::{self, SynthConfig, WordKind};
use uht_core::eval::{self, Frame};
use uht_core::geometry::{self, Point2D, TextPolygon};
use uht_core::heatmap::{self, EncodeConfig, LossConfig, Reduction};
use uht_core::textfill::{self, Preset, TextfillConfig};

type Ring = Vec<(f64, f64)>;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn points(ring: &[(f64, f64)]) -> Vec<Point2D> {
    ring.iter().map(|&(x, y)| Point2D::new(x, y)).collect()
}

fn tuples(ring: &[Point2D]) -> Vec<(f64, f64)> {
    ring.iter().map(|p| (p.x, p.y)).collect()
}

fn text_polygons(rings: &[Vec<(f64, f64)>], ignore: Option<&[bool]>) -> PyResult<Vec<TextPolygon>> {
    if let Some(flags) = ignore {
        if flags.len() != rings.len() {
            return Err(PyValueError::new_err("ignore must have one flag per polygon"));
        }
    }
    Ok(rings
        .iter()
        .enumerate()
        .map(|(i, r)| TextPolygon::new(points(r)).with_ignore(ignore.is_some_and(|f| f[i])))
        .collect())
}

/// Dense `f32` heatmap in row-major order.
#[pyclass(module = "uht", from_py_object)]
#[derive(Clone)]
pub struct Heatmap {
    inner: heatmap::Heatmap,
}

#[pymethods]
impl Heatmap {
    #[new]
    #[pyo3(signature = (width, height, values=None))]
    fn new(width: usize, height: usize, values: Option<Vec<f32>>) -> PyResult<Self> {
        let inner = match values {
            Some(v) => heatmap::Heatmap::from_values(width, height, v).map_err(value_err)?,
            None => heatmap::Heatmap::zeros(width, height),
        };
        Ok(Self { inner })
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    fn get(&self, x: i32, y: i32) -> PyResult<f32> {
        if !self.inner.in_bounds(x, y) {
            return Err(PyValueError::new_err(format!("({x}, {y}) is outside the heatmap")));
        }
        Ok(self.inner.get(x, y))
    }

    fn values(&self) -> Vec<f32> {
        self.inner.values().to_vec()
    }

    fn max_value(&self) -> f32 {
        self.inner.max_value()
    }

    /// Serializes to the UHTH binary format.
    fn to_bytes(&self) -> PyResult<Vec<u8>> {
        let mut buf = Vec::new();
        self.inner.write_uhth(&mut buf).map_err(|e| PyIOError::new_err(e.to_string()))?;
        Ok(buf)
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        let inner = heatmap::Heatmap::read_uhth(data).map_err(value_err)?;
        Ok(Self { inner })
    }

    fn __repr__(&self) -> String {
        format!("Heatmap({}x{}, max={})", self.inner.width(), self.inner.height(), self.inner.max_value())
    }
}

/// One decoded word.
#[pyclass(module = "uht", get_all, from_py_object)]
#[derive(Clone)]
pub struct Detection {
    polygon: Vec<(f64, f64)>,
    score: f64,
    area: usize,
}

#[pymethods]
impl Detection {
    fn __repr__(&self) -> String {
        format!("Detection({} vertices, score={:.3}, area={})", self.polygon.len(), self.score, self.area)
    }
}

impl From<textfill::Detection> for Detection {
    fn from(d: textfill::Detection) -> Self {
        Self {
            polygon: tuples(&d.polygon),
            score: d.score,
            area: d.region_area,
        }
    }
}

/// Renders the groundtruth heatmap; returns `(heatmap, dont_care, diagnostics)`
/// where `dont_care` is a 0/1 heatmap of the ignored polygons.
#[pyfunction]
#[pyo3(signature = (polygons, width, height, m=geometry::DEFAULT_SUBDIVISIONS, ignore=None))]
fn render_groundtruth(
    polygons: Vec<Vec<(f64, f64)>>,
    width: usize,
    height: usize,
    m: u32,
    ignore: Option<Vec<bool>>,
) -> PyResult<(Heatmap, Heatmap, Vec<String>)> {
    if m == 0 {
        return Err(PyValueError::new_err("m must be at least 1"));
    }
    let polys = text_polygons(&polygons, ignore.as_deref())?;
    let cfg = EncodeConfig { m, ..EncodeConfig::default() };
    let r = heatmap::render_groundtruth(&polys, width, height, &cfg);
    let mask = r.dont_care.bits().iter().map(|&b| b as u8 as f32).collect();
    let dont_care = heatmap::Heatmap::from_values(width, height, mask).map_err(value_err)?;
    Ok((
        Heatmap { inner: r.heatmap },
        Heatmap { inner: dont_care },
        r.diagnostics.iter().map(|d| d.to_string()).collect(),
    ))
}

/// Textfill decoding. A `preset` name sets both thresholds; explicit values win.
#[pyfunction]
#[pyo3(signature = (heatmap, t_top=None, t_end=None, preset=None))]
fn decode(heatmap: &Heatmap, t_top: Option<f64>, t_end: Option<f64>, preset: Option<&str>) -> PyResult<Vec<Detection>> {
    let mut cfg = match preset {
        Some(name) => name.parse::<Preset>().map_err(PyValueError::new_err)?.config(),
        None => TextfillConfig::default(),
    };
    cfg.t_top = t_top.unwrap_or(cfg.t_top);
    cfg.t_end = t_end.unwrap_or(cfg.t_end);
    let dets = textfill::decode(&heatmap.inner, &cfg).map_err(value_err)?;
    Ok(dets.into_iter().map(Detection::from).collect())
}

#[pyfunction]
fn kernel_size(area: usize) -> usize {
    textfill::kernel_size(area)
}

#[pyfunction]
#[pyo3(signature = (a, b, resolution=1.0))]
fn polygon_iou(a: Vec<(f64, f64)>, b: Vec<(f64, f64)>, resolution: f64) -> f64 {
    eval::polygon_iou(&points(&a), &points(&b), resolution)
}

/// Trimmed text skeleton of one polygon as `(centers, radii)`.
#[pyfunction]
#[pyo3(signature = (polygon, m=geometry::DEFAULT_SUBDIVISIONS))]
fn skeleton(polygon: Ring, m: u32) -> PyResult<(Ring, Vec<f64>)> {
    let (sk, _) = geometry::build_skeleton(&TextPolygon::new(points(&polygon)), m, 0).map_err(value_err)?;
    Ok((tuples(&sk.centers), sk.radii))
}

/// Subdivided vertex pairs as `[(up, down), ...]`.
#[pyfunction]
#[pyo3(signature = (polygon, m=geometry::DEFAULT_SUBDIVISIONS))]
fn subdivide(polygon: Ring, m: u32) -> PyResult<Vec<[(f64, f64); 2]>> {
    let pairs = geometry::pair_vertices(&TextPolygon::new(points(&polygon))).map_err(value_err)?;
    let pairs = geometry::subdivide(&pairs, m).map_err(value_err)?;
    Ok(pairs.pairs.iter().map(|p| [(p.up.x, p.up.y), (p.down.x, p.down.y)]).collect())
}

fn loss_config(lambda1: f64, lambda2: f64, sum: bool) -> LossConfig {
    LossConfig {
        lambda_center: lambda1,
        lambda_region: lambda2,
        reduction: if sum { Reduction::Sum } else { Reduction::Mean },
        ..LossConfig::default()
    }
}

#[pyfunction]
#[pyo3(signature = (pred, gt, sum=false))]
fn loss_reg(pred: &Heatmap, gt: &Heatmap, sum: bool) -> PyResult<f64> {
    let cfg = loss_config(1.0, 1.0, sum);
    heatmap::loss_reg(&pred.inner, &gt.inner, cfg.positive_threshold, cfg.reduction).map_err(value_err)
}

#[pyfunction]
fn loss_dice(pred: &Heatmap, gt: &Heatmap, threshold: f64) -> PyResult<f64> {
    heatmap::loss_dice(&pred.inner, &gt.inner, threshold).map_err(value_err)
}

/// All loss terms as a dict with `l_reg`, `l_center`, `l_region` and `total`.
#[pyfunction]
#[pyo3(signature = (pred, gt, lambda1=1.0, lambda2=1.0, sum=false))]
fn loss_total(pred: &Heatmap, gt: &Heatmap, lambda1: f64, lambda2: f64, sum: bool) -> PyResult<HashMap<&'static str, f64>> {
    let l = heatmap::loss_total(&pred.inner, &gt.inner, &loss_config(lambda1, lambda2, sum)).map_err(value_err)?;
    Ok(HashMap::from([
        ("l_reg", l.l_reg),
        ("l_center", l.l_center),
        ("l_region", l.l_region),
        ("total", l.total),
    ]))
}

/// Pooled precision, recall and F-measure. `groundtruth` and `predictions`
/// hold one list of polygons per image; `ignore` optionally flags
/// groundtruth polygons per image.
#[pyfunction]
#[pyo3(signature = (groundtruth, predictions, iou=eval::DEFAULT_MATCH_IOU, ignore=None))]
fn evaluate(
    groundtruth: Vec<Vec<Vec<(f64, f64)>>>,
    predictions: Vec<Vec<Vec<(f64, f64)>>>,
    iou: f64,
    ignore: Option<Vec<Vec<bool>>>,
) -> PyResult<HashMap<&'static str, f64>> {
    if groundtruth.len() != predictions.len() {
        return Err(PyValueError::new_err("groundtruth and predictions must cover the same images"));
    }
    let mut tally = eval::Tally::default();
    for (i, (gt, pred)) in groundtruth.iter().zip(&predictions).enumerate() {
        let flags = ignore.as_ref().map(|f| f.get(i).map(Vec::as_slice).unwrap_or(&[]));
        let gts = text_polygons(gt, flags)?;
        let preds: Vec<Vec<Point2D>> = pred.iter().map(|p| points(p)).collect();
        tally = tally + eval::Tally::of(&eval::match_detections(&preds, &gts, iou));
    }
    let (p, r, f) = tally.scores();
    Ok(HashMap::from([
        ("precision", p),
        ("recall", r),
        ("fmeasure", f),
        ("true_positives", tally.true_positives as f64),
        ("predictions", tally.predictions as f64),
        ("groundtruth", tally.groundtruth as f64),
    ]))
}

/// Greedy polygon NMS over `(polygon, score, area)` tuples; returns kept indices.
#[pyfunction]
#[pyo3(signature = (detections, iou=eval::DEFAULT_MERGE_IOU))]
fn nms(detections: Vec<(Ring, f64, usize)>, iou: f64) -> Vec<usize> {
    let dets: Vec<textfill::Detection> = detections
        .iter()
        .map(|(p, s, a)| textfill::Detection {
            polygon: points(p),
            score: *s,
            region_area: *a,
        })
        .collect();
    let mut used = vec![false; dets.len()];
    eval::polygon_nms(&dets, iou)
        .iter()
        .filter_map(|k| {
            let i = (0..dets.len()).find(|&i| !used[i] && &dets[i] == k)?;
            used[i] = true;
            Some(i)
        })
        .collect()
}

/// Maps a point between canvas sizes `(width, height)`.
#[pyfunction]
fn rescale_point(point: (f64, f64), source: (f64, f64), target: (f64, f64)) -> (f64, f64) {
    let p = eval::rescale_point(
        Point2D::new(point.0, point.1),
        Frame::new(source.0, source.1),
        Frame::new(target.0, target.1),
    );
    (p.x, p.y)
}

/// Seeded synthetic corpus as a list of dicts with `image_id`, `width`,
/// `height` and `polygons`.
#[pyfunction]
#[pyo3(signature = (n, seed=0, width=512, height=512, kinds=None))]
fn synth_corpus<'py>(
    py: Python<'py>,
    n: usize,
    seed: u64,
    width: u32,
    height: u32,
    kinds: Option<Vec<String>>,
) -> PyResult<Vec<Bound<'py, pyo3::types::PyDict>>> {
    let kinds = match kinds {
        Some(k) => k.iter().map(|s| s.parse::<WordKind>()).collect::<Result<_, _>>().map_err(PyValueError::new_err)?,
        None => SynthConfig::default().kinds,
    };
    let (corpus, _) = datasets::synth_corpus(&SynthConfig {
        images: n,
        seed,
        width,
        height,
        kinds,
        ..SynthConfig::default()
    });
    corpus
        .images
        .iter()
        .map(|img| {
            let d = pyo3::types::PyDict::new(py);
            d.set_item("image_id", &img.image_id)?;
            d.set_item("width", img.width)?;
            d.set_item("height", img.height)?;
            let polys: Vec<Vec<(f64, f64)>> = img.polygons.iter().map(|p| tuples(&p.vertices)).collect();
            d.set_item("polygons", polys)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
pub fn uht(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Heatmap>()?;
    m.add_class::<Detection>()?;
    m.add_function(wrap_pyfunction!(render_groundtruth, m)?)?;
    m.add_function(wrap_pyfunction!(decode, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_size, m)?)?;
    m.add_function(wrap_pyfunction!(polygon_iou, m)?)?;
    m.add_function(wrap_pyfunction!(skeleton, m)?)?;
    m.add_function(wrap_pyfunction!(subdivide, m)?)?;
    m.add_function(wrap_pyfunction!(loss_reg, m)?)?;
    m.add_function(wrap_pyfunction!(loss_dice, m)?)?;
    m.add_function(wrap_pyfunction!(loss_total, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(nms, m)?)?;
    m.add_function(wrap_pyfunction!(rescale_point, m)?)?;
    m.add_function(wrap_pyfunction!(synth_corpus, m)?)?;
    Ok(())
}
