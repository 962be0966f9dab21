//! Python bindings: boxes and IoU, corpus synthesis, baseline detection,
//! evaluation and the paper/image catalog.
//!
//! Structured results cross the boundary as plain dicts and lists.

use std::fmt::Display;
use std::path::PathBuf;

use figharvest_core::catalog::{self, CatalogConfig, ImageFilter, Query, TermMode, Venue};
use figharvest_core::detect::{baseline_detect_pages, list_pages, read_predictions, write_predictions, BaselineConfig};
use figharvest_core::eval::{evaluate as run_eval, EvalConfig};
use figharvest_core::geometry;
use figharvest_core::labels::{read_jsonl, PageLabels};
use figharvest_core::synth::{compose_corpus, load_asset_pool, procedural::generate_pool, PageSpec};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError};
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(figharvest, FigharvestError, PyException, "Invalid input or configuration.");

fn invalid(e: impl Display) -> PyErr {
    FigharvestError::new_err(e.to_string())
}

fn fail(e: impl Display, io: bool) -> PyErr {
    if io {
        PyOSError::new_err(e.to_string())
    } else {
        invalid(e)
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(invalid)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Axis-aligned box in page pixels, `x_min < x_max`, `y_min < y_max`.
#[pyclass(frozen, from_py_object, module = "figharvest")]
#[derive(Clone, Copy)]
pub struct BBox(geometry::BBox);

#[pymethods]
impl BBox {
    #[new]
    fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> PyResult<Self> {
        geometry::BBox::new(x_min, y_min, x_max, y_max).map(BBox).map_err(invalid)
    }

    #[staticmethod]
    fn from_xywh(x: f64, y: f64, w: f64, h: f64) -> PyResult<Self> {
        geometry::BBox::from_xywh(x, y, w, h).map(BBox).map_err(invalid)
    }

    #[getter]
    fn x_min(&self) -> f64 {
        self.0.x_min()
    }
    #[getter]
    fn y_min(&self) -> f64 {
        self.0.y_min()
    }
    #[getter]
    fn x_max(&self) -> f64 {
        self.0.x_max()
    }
    #[getter]
    fn y_max(&self) -> f64 {
        self.0.y_max()
    }

    fn area(&self) -> f64 {
        self.0.area()
    }

    fn intersection_area(&self, other: &BBox) -> f64 {
        self.0.intersection_area(&other.0)
    }

    fn iou(&self, other: &BBox) -> f64 {
        geometry::iou(&self.0, &other.0)
    }

    #[allow(clippy::wrong_self_convention)]
    fn to_tuple(&self) -> (f64, f64, f64, f64) {
        (self.0.x_min(), self.0.y_min(), self.0.x_max(), self.0.y_max())
    }

    fn __eq__(&self, other: &BBox) -> bool {
        self.to_tuple() == other.to_tuple()
    }

    fn __repr__(&self) -> String {
        let (a, b, c, d) = self.to_tuple();
        format!("BBox({a}, {b}, {c}, {d})")
    }
}

#[pyfunction]
fn iou(a: &BBox, b: &BBox) -> f64 {
    geometry::iou(&a.0, &b.0)
}

/// IoU of the union of `parts` against `target`.
#[pyfunction]
fn union_iou(parts: Vec<BBox>, target: &BBox) -> PyResult<f64> {
    let parts: Vec<_> = parts.into_iter().map(|b| b.0).collect();
    geometry::union_iou(&parts, &target.0).map_err(invalid)
}

/// Composes `pages` labelled pages into `out`; returns the corpus manifest.
/// Without `assets`, a procedural pool of `procedural` assets per category
/// is drawn into `out/assets`.
#[pyfunction]
#[pyo3(signature = (out, pages=10, seed=0, assets=None, procedural=3))]
fn synthesize<'py>(
    py: Python<'py>,
    out: PathBuf,
    pages: usize,
    seed: u64,
    assets: Option<PathBuf>,
    procedural: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = PageSpec { seed, ..PageSpec::default() };
    let manifest = py.detach(|| {
        let pool_manifest = match assets {
            Some(a) => a,
            None => generate_pool(&out.join("assets"), procedural.max(1), seed)?,
        };
        let pool = load_asset_pool(&pool_manifest)?;
        compose_corpus(pages, &spec, &pool, &out)
    });
    let manifest = manifest.map_err(|e| {
        let io = e.is_io();
        fail(e, io)
    })?;
    to_py(py, &manifest)
}

/// Runs the connected-component baseline over every page raster in
/// `pages_dir`, writes predictions JSONL to `out` and returns their count.
#[pyfunction]
fn detect(py: Python<'_>, pages_dir: PathBuf, out: PathBuf) -> PyResult<usize> {
    py.detach(|| {
        let pages = list_pages(&pages_dir)?;
        let sets = baseline_detect_pages(&pages, &BaselineConfig::default())?;
        write_predictions(&out, &sets)?;
        Ok(sets.iter().map(|s| s.predictions.len()).sum())
    })
    .map_err(|e: figharvest_core::detect::DetectError| {
        let io = e.is_io();
        fail(e, io)
    })
}

/// Matches predictions against ground truth; returns the full report
/// (counts, metrics, effort, per-page matches, matching divergences).
#[pyfunction]
#[pyo3(signature = (labels, predictions, iou_threshold=0.8, multibox=true, class_strict=true, relabel_only=false))]
fn evaluate<'py>(
    py: Python<'py>,
    labels: PathBuf,
    predictions: PathBuf,
    iou_threshold: f64,
    multibox: bool,
    class_strict: bool,
    relabel_only: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = EvalConfig {
        iou_threshold,
        allow_multibox: multibox,
        class_strict,
        relabel_only,
        ..EvalConfig::default()
    };
    let gt: Vec<PageLabels> = read_jsonl(&labels).map_err(|e| {
        let io = e.is_io();
        fail(e, io)
    })?;
    let sets = read_predictions(&predictions).map_err(|e| {
        let io = e.is_io();
        fail(e, io)
    })?;
    let report = py.detach(|| run_eval(&gt, &sets, &cfg)).map_err(invalid)?;
    let value = to_py(py, &report)?;
    value.set_item("summary", report.summary())?;
    Ok(value)
}

/// Searchable index of papers and their extracted images.
#[pyclass(frozen, module = "figharvest")]
pub struct Catalog {
    inner: catalog::Catalog,
}

fn catalog_err(e: catalog::CatalogError) -> PyErr {
    let io = e.is_io();
    fail(e, io)
}

#[pymethods]
impl Catalog {
    /// Builds a catalog from papers and images files (CSV/TSV or JSONL).
    /// Returns `(catalog, report)` where the report lists warnings and
    /// rejected images.
    #[staticmethod]
    fn ingest<'py>(py: Python<'py>, papers: PathBuf, images: PathBuf) -> PyResult<(Catalog, Bound<'py, PyAny>)> {
        let (inner, report) = catalog::Catalog::ingest(&papers, &images, CatalogConfig::default()).map_err(catalog_err)?;
        Ok((Catalog { inner }, to_py(py, &report)?))
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Catalog> {
        catalog::Catalog::load(&path).map(|inner| Catalog { inner }).map_err(catalog_err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(catalog_err)
    }

    fn digest(&self) -> String {
        self.inner.digest()
    }

    fn totals<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.totals())
    }

    #[pyo3(signature = (by_year=true, by_venue=true))]
    fn stats<'py>(&self, py: Python<'py>, by_year: bool, by_venue: bool) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.stats_by(by_year, by_venue))
    }

    fn paper<'py>(&self, py: Python<'py>, doi: &str) -> PyResult<Option<Bound<'py, PyAny>>> {
        self.inner.paper(doi).map(|p| to_py(py, p)).transpose()
    }

    fn image<'py>(&self, py: Python<'py>, image_id: &str) -> PyResult<Option<Bound<'py, PyAny>>> {
        self.inner.image(image_id).map(|i| to_py(py, i)).transpose()
    }

    /// Faceted search; results come back in canonical catalog order.
    /// `venues` is a list of venue names; `mode` is `title_and_abstract`
    /// or `author_keywords`; `image_type` is `figure`, `table` or `both`.
    #[pyo3(signature = (terms=None, mode=None, authors=None, venues=None, year_from=None, year_to=None, image_type=None, stem=false))]
    #[allow(clippy::too_many_arguments)]
    fn search<'py>(
        &self,
        py: Python<'py>,
        terms: Option<String>,
        mode: Option<&str>,
        authors: Option<String>,
        venues: Option<Vec<String>>,
        year_from: Option<i32>,
        year_to: Option<i32>,
        image_type: Option<&str>,
        stem: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let cfg = self.inner.config();
        let year_range = match (year_from, year_to) {
            (None, None) => None,
            (lo, hi) => Some((lo.unwrap_or(cfg.year_min), hi.unwrap_or(cfg.year_max))),
        };
        let query = Query {
            terms,
            term_mode: mode.map(str::parse::<TermMode>).transpose().map_err(invalid)?.unwrap_or_default(),
            authors,
            venues: venues
                .unwrap_or_default()
                .iter()
                .map(|v| v.parse::<Venue>())
                .collect::<Result<_, _>>()
                .map_err(invalid)?,
            year_range,
            image_type: image_type.map(str::parse::<ImageFilter>).transpose().map_err(invalid)?.unwrap_or_default(),
            stem,
        };
        let hits = self.inner.search(&query).map_err(catalog_err)?;
        to_py(py, &hits)
    }

    fn __len__(&self) -> usize {
        self.inner.images().len()
    }

    fn __repr__(&self) -> String {
        format!("Catalog({} papers, {} images)", self.inner.papers().count(), self.inner.images().len())
    }
}

#[pymodule]
fn figharvest(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FigharvestError", m.py().get_type::<FigharvestError>())?;
    m.add_class::<BBox>()?;
    m.add_class::<Catalog>()?;
    m.add_function(wrap_pyfunction!(iou, m)?)?;
    m.add_function(wrap_pyfunction!(union_iou, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(detect, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::ffi::CString;

    use pyo3::types::PyDict;

    use super::*;

    fn run(code: &str, dir: &std::path::Path) {
        Python::initialize();
        Python::attach(|py| {
            let m = PyModule::new(py, "figharvest").unwrap();
            figharvest(&m).unwrap();
            let globals = PyDict::new(py);
            globals.set_item("fh", m).unwrap();
            globals.set_item("tmp", dir.to_str().unwrap()).unwrap();
            let code = CString::new(code).unwrap();
            if let Err(e) = py.run(&code, Some(&globals), None) {
                e.print(py);
                panic!("python snippet failed");
            }
        });
    }

    #[test]
    fn boxes_from_python() {
        run(
            r#"
a = fh.BBox(0, 0, 10, 10)
b = fh.BBox.from_xywh(5, 0, 10, 10)
assert a.area() == 100
assert abs(fh.iou(a, b) - 50 / 150) < 1e-12
assert a.iou(b) == fh.iou(b, a)
assert fh.union_iou([fh.BBox(0, 0, 5, 10), fh.BBox(5, 0, 10, 10)], a) == 1.0
try:
    fh.BBox(5, 0, 1, 1)
    raise AssertionError("inverted box accepted")
except fh.FigharvestError:
    pass
"#,
            std::path::Path::new("."),
        );
    }

    #[test]
    fn pipeline_from_python() {
        let dir = tempfile::tempdir().unwrap();
        run(
            r#"
import os
m = fh.synthesize(os.path.join(tmp, "c"), pages=3, seed=5)
assert m["n_pages"] == 3
labels = os.path.join(tmp, "c", m["labels_file"])
r = fh.evaluate(labels, labels)
assert r["summary"] == "P=1.00 R=1.00 F1=1.00 effort=0%", r["summary"]
n = fh.detect(os.path.join(tmp, "c"), os.path.join(tmp, "p.jsonl"))
r = fh.evaluate(labels, os.path.join(tmp, "p.jsonl"))
assert sum(pg["n_preds"] for pg in r["pages"]) == n
assert len(r["pages"]) == 3
try:
    fh.evaluate(os.path.join(tmp, "absent.jsonl"), labels)
    raise AssertionError("missing file accepted")
except OSError:
    pass
"#,
            dir.path(),
        );
    }
}
