use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use gradsurf::bench::{self, BenchConfig, NoiseSpec, Scale, Table, TestFunction};
use gradsurf::io::{self as gio, MeshMeta};
use gradsurf::{
    evaluate, validate_training_set, CombinationStrategy, DataView, Error, EvalConfig, MeshIndex, Method, Point,
    ScatteredView, SmoothConfig, TrainingSet,
};

fn to_py(e: Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn json_to_py(py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn eval_config(
    method: &str,
    combinations: usize,
    strategy: &str,
    d: f64,
    tolerance: f64,
    max_iterations: usize,
) -> PyResult<EvalConfig> {
    if combinations == 0 {
        return Err(PyValueError::new_err("combinations must be at least 1"));
    }
    let smooth = SmoothConfig {
        d,
        tolerance,
        max_iterations,
    };
    smooth.validate().map_err(to_py)?;
    Ok(EvalConfig {
        method: method.parse::<Method>().map_err(to_py)?,
        combinations,
        strategy: strategy.parse::<CombinationStrategy>().map_err(to_py)?,
        smooth,
    })
}

/// One estimate with its diagnostics.
#[pyclass(frozen, get_all)]
struct Estimate {
    value: f64,
    method: String,
    combinations: usize,
    extrapolated: bool,
    residual: f64,
    combination_values: Vec<f64>,
    /// Per-axis resolution of the smooth method, e.g. "corrected".
    axis_flags: Vec<String>,
}

#[pymethods]
impl Estimate {
    fn __repr__(&self) -> String {
        format!("Estimate(value={}, method='{}')", self.value, self.method)
    }
}

impl From<gradsurf::Estimate> for Estimate {
    fn from(e: gradsurf::Estimate) -> Self {
        let axis_flags = e
            .diagnostics
            .axes
            .iter()
            .map(|a| a.flag.name().to_string())
            .collect();
        Estimate {
            value: e.value,
            method: e.method.to_string(),
            combinations: e.combinations,
            extrapolated: e.diagnostics.extrapolated,
            residual: e.diagnostics.residual,
            combination_values: e.diagnostics.combination_values,
            axis_flags,
        }
    }
}

/// Training data, optionally with a mesh index for the smooth method.
#[pyclass(frozen)]
struct Dataset {
    training: TrainingSet,
    mesh: Option<MeshIndex>,
}

impl Dataset {
    fn with_view<T>(&self, method: Method, f: impl FnOnce(DataView<'_>) -> T) -> PyResult<T> {
        match (&self.mesh, method) {
            (Some(mesh), _) => Ok(f(DataView::Mesh(&mesh.view(&self.training)))),
            (None, Method::Smooth) => Err(to_py(Error::MeshRequired)),
            (None, Method::Gradient) => Ok(f(DataView::Scattered(&ScatteredView::new(&self.training)))),
        }
    }
}

#[pymethods]
impl Dataset {
    /// `outcomes` holds one value per point, or one list per point for
    /// several layers. Pass `axes` (node lists) to index a mesh, or
    /// `infer_mesh=True` for an unjittered grid.
    #[new]
    #[pyo3(signature = (coords, outcomes, axes=None, jitter=0.0, infer_mesh=false))]
    fn new(
        coords: Vec<Vec<f64>>,
        outcomes: &Bound<'_, PyAny>,
        axes: Option<Vec<Vec<f64>>>,
        jitter: f64,
        infer_mesh: bool,
    ) -> PyResult<Self> {
        let outcomes: Vec<Vec<f64>> = match outcomes.extract::<Vec<f64>>() {
            Ok(flat) => flat.into_iter().map(|y| vec![y]).collect(),
            Err(_) => outcomes.extract()?,
        };
        if coords.len() != outcomes.len() {
            return Err(PyValueError::new_err("coords and outcomes differ in length"));
        }
        let dim = coords.first().map_or(0, Vec::len);
        let layers = outcomes.first().map_or(1, Vec::len);
        let points = coords.into_iter().zip(outcomes).map(|(c, y)| Point::layered(c, y)).collect();
        let training = validate_training_set(points, dim, layers).map_err(to_py)?;
        let mesh = match (axes, infer_mesh) {
            (Some(axes), _) => Some(MeshIndex::build(&training, axes, jitter).map_err(to_py)?),
            (None, true) => Some(MeshIndex::infer(&training).map_err(to_py)?),
            (None, false) => None,
        };
        Ok(Dataset { training, mesh })
    }

    /// Reads a CSV dataset and its mesh sidecar, if any.
    #[staticmethod]
    #[pyo3(signature = (path, mesh_path=None))]
    fn load(path: PathBuf, mesh_path: Option<PathBuf>) -> PyResult<Self> {
        let ds = gio::load_dataset(&path, mesh_path.as_deref()).map_err(to_py)?;
        Ok(Dataset {
            training: ds.training,
            mesh: ds.mesh,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        let meta = self.mesh.as_ref().map(|m| MeshMeta {
            axes: Some(m.axes().to_vec()),
            jitter: m.jitter(),
        });
        gio::save_dataset(&path, &self.training, meta.as_ref()).map_err(to_py)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.training.dim()
    }

    #[getter]
    fn layer_count(&self) -> usize {
        self.training.layer_count()
    }

    #[getter]
    fn has_mesh(&self) -> bool {
        self.mesh.is_some()
    }

    fn __len__(&self) -> usize {
        self.training.len()
    }

    fn coords(&self, i: usize) -> PyResult<Vec<f64>> {
        self.check_index(i)?;
        Ok(self.training.coords(i).to_vec())
    }

    fn outcomes(&self, i: usize) -> PyResult<Vec<f64>> {
        self.check_index(i)?;
        Ok(self.training.outcomes(i).to_vec())
    }

    #[pyo3(signature = (query, method="smooth", layer=0, combinations=1, strategy="nearest", d=1.0, tolerance=1e-9, max_iterations=20))]
    #[allow(clippy::too_many_arguments)]
    fn evaluate(
        &self,
        py: Python<'_>,
        query: Vec<f64>,
        method: &str,
        layer: usize,
        combinations: usize,
        strategy: &str,
        d: f64,
        tolerance: f64,
        max_iterations: usize,
    ) -> PyResult<Estimate> {
        let cfg = eval_config(method, combinations, strategy, d, tolerance, max_iterations)?;
        if layer >= self.training.layer_count() {
            return Err(PyValueError::new_err(format!("no layer {layer}")));
        }
        let est = py.detach(|| self.with_view(cfg.method, |v| evaluate(v, &query, &cfg, layer)))?;
        est.map(Estimate::from).map_err(to_py)
    }

    /// Every layer for every query. Failed estimates come back as `None`.
    #[pyo3(signature = (queries, method="smooth", workers=1, combinations=1, strategy="nearest", d=1.0, tolerance=1e-9, max_iterations=20))]
    #[allow(clippy::too_many_arguments)]
    fn impute(
        &self,
        py: Python<'_>,
        queries: Vec<Vec<f64>>,
        method: &str,
        workers: usize,
        combinations: usize,
        strategy: &str,
        d: f64,
        tolerance: f64,
        max_iterations: usize,
    ) -> PyResult<Vec<Vec<Option<f64>>>> {
        let cfg = eval_config(method, combinations, strategy, d, tolerance, max_iterations)?;
        if let Some(q) = queries.iter().find(|q| q.len() != self.training.dim()) {
            return Err(PyValueError::new_err(format!(
                "query has {} coordinates, expected {}",
                q.len(),
                self.training.dim()
            )));
        }
        let results = py
            .detach(|| self.with_view(cfg.method, |v| gio::impute(v, &queries, &cfg, workers)))?
            .map_err(to_py)?;
        Ok(results
            .iter()
            .map(|r| r.components.iter().map(|c| c.as_ref().ok().map(|e| e.value)).collect())
            .collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(points={}, dim={}, layers={}, mesh={})",
            self.training.len(),
            self.training.dim(),
            self.training.layer_count(),
            self.mesh.is_some()
        )
    }
}

impl Dataset {
    fn check_index(&self, i: usize) -> PyResult<()> {
        if i < self.training.len() {
            Ok(())
        } else {
            Err(pyo3::exceptions::PyIndexError::new_err(i))
        }
    }
}

/// Synthetic mesh data for one of the benchmark surfaces (`"T1"`, `"S1"`,
/// `"S2"`, `"H1:<n>"`, ...).
#[pyfunction]
#[pyo3(signature = (function, nodes_per_axis, domain=(0.0, 3.0), jitter=0.0, noise="none", seed=7))]
fn gen_mesh_dataset(
    function: &str,
    nodes_per_axis: usize,
    domain: (f64, f64),
    jitter: f64,
    noise: &str,
    seed: u64,
) -> PyResult<Dataset> {
    let function: TestFunction = function.parse().map_err(to_py)?;
    let noise: NoiseSpec = noise.parse().map_err(to_py)?;
    let ds = bench::gen_mesh_dataset(function, nodes_per_axis, domain, jitter, noise, seed).map_err(to_py)?;
    Ok(Dataset {
        training: ds.training,
        mesh: Some(ds.mesh),
    })
}

/// Runs one accuracy table and returns its rows as dictionaries.
#[pyfunction]
#[pyo3(signature = (table, scale="small", seed=7, workers=1, timing=false, budget=None))]
fn run_benchmark(
    py: Python<'_>,
    table: &str,
    scale: &str,
    seed: u64,
    workers: usize,
    timing: bool,
    budget: Option<usize>,
) -> PyResult<Py<PyAny>> {
    let mut cfg = BenchConfig::new(table.parse::<Table>().map_err(to_py)?, scale.parse::<Scale>().map_err(to_py)?, seed);
    cfg.workers = workers;
    cfg.timing = timing;
    cfg.query_budget = budget;
    let report = py.detach(|| bench::run_benchmark(&cfg)).map_err(to_py)?;
    let mut buf = Vec::new();
    gio::write_report_jsonl(&mut buf, &report).map_err(to_py)?;
    let rows: Vec<&str> = std::str::from_utf8(&buf)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?
        .lines()
        .collect();
    json_to_py(py, &format!("[{}]", rows.join(",")))
}

/// Error statistics of estimates against true and reference values.
#[pyfunction]
fn compute_stats<'py>(
    py: Python<'py>,
    estimates: Vec<f64>,
    truths: Vec<f64>,
    reference_truths: Vec<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let s = bench::compute_stats(&estimates, &truths, &reference_truths).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("m", s.m)?;
    d.set_item("avg_y_differ", s.avg_y_differ)?;
    d.set_item("avg_abs_err", s.avg_abs_err)?;
    d.set_item("max_abs_err", s.max_abs_err)?;
    d.set_item("rel_err", s.rel_err)?;
    Ok(d)
}

/// The approximating function `A(x)` with end gradients `g1r`, `g2l` on
/// `[0, b]`.
#[pyfunction]
#[pyo3(signature = (x, b, g1r, g2l, d=1.0))]
fn approx_eval(x: f64, b: f64, g1r: f64, g2l: f64, d: f64) -> PyResult<f64> {
    let p = gradsurf::smooth::ApproxFunctionParams::new(b, g1r, g2l, d).map_err(to_py)?;
    Ok(p.eval(x))
}

#[pymodule]
pub fn gradsurf_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<Estimate>()?;
    m.add_function(wrap_pyfunction!(gen_mesh_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(run_benchmark, m)?)?;
    m.add_function(wrap_pyfunction!(compute_stats, m)?)?;
    m.add_function(wrap_pyfunction!(approx_eval, m)?)?;
    Ok(())
}
