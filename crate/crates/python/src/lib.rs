//! Python bindings for the Bertrand/Cournot mean field game solver.
//!
//! Reports are returned as plain dicts with the same layout as the JSON
//! files written by the command-line tool.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use bertrand_mfg::audit::audit_all;
use bertrand_mfg::config::{load_config, RunConfig};
use bertrand_mfg::coupling::{self, uniqueness_experiment};
use bertrand_mfg::grid::{build_grid, ScalarPath};
use bertrand_mfg::runner;
use bertrand_mfg::verification::{self, TimeProfile};
use bertrand_mfg::Error;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::Config(_) | Error::Invalid { .. } | Error::Parse { .. } | Error::Shape(_) | Error::Domain(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_dict<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyDict>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let obj = py.import("json")?.call_method1("loads", (text,))?;
    Ok(obj.cast_into::<PyDict>()?)
}

fn rows(field: &bertrand_mfg::Field) -> Vec<Vec<f64>> {
    (0..field.n_times()).map(|n| field.slice(n).to_vec()).collect()
}

/// Run configuration; `Config(text)` parses the TOML file format.
#[pyclass(name = "Config", module = "bertrand_mfg_py", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (text = ""))]
    fn new(text: &str) -> PyResult<Self> {
        let inner = RunConfig::parse(text, &PathBuf::from("<string>")).map_err(to_py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: load_config(&path).map_err(to_py_err)?,
        })
    }

    /// Sets epsilon, sigma, r, L or T and revalidates.
    fn set(&mut self, name: &str, value: f64) -> PyResult<()> {
        let mut next = self.inner.clone();
        next.set_param(name, value).map_err(to_py_err)?;
        next.validate().map_err(to_py_err)?;
        self.inner = next;
        Ok(())
    }

    /// Changes the grid size and revalidates.
    fn resize(&mut self, nx: usize, nt: usize) -> PyResult<()> {
        let mut next = self.inner.clone();
        next.disc.nx = nx;
        next.disc.nt = nt;
        next.validate().map_err(to_py_err)?;
        self.inner = next;
        Ok(())
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml()
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.params.epsilon
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.params.sigma
    }

    #[getter]
    fn r(&self) -> f64 {
        self.inner.params.r
    }

    #[getter]
    fn nx(&self) -> usize {
        self.inner.disc.nx
    }

    #[getter]
    fn nt(&self) -> usize {
        self.inner.disc.nt
    }

    fn __repr__(&self) -> String {
        let p = &self.inner.params;
        format!(
            "Config(epsilon={}, sigma={}, r={}, L={}, T={}, nx={}, nt={})",
            p.epsilon, p.sigma, p.r, p.length, p.horizon, self.inner.disc.nx, self.inner.disc.nt
        )
    }
}

/// A computed equilibrium.
#[pyclass(name = "Solution", module = "bertrand_mfg_py", frozen)]
struct PySolution {
    inner: coupling::Solution,
}

#[pymethods]
impl PySolution {
    /// Value function, one list per time node.
    #[getter]
    fn u(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.u)
    }

    /// Density, one list per time node.
    #[getter]
    fn m(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.m)
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        self.inner.grid.x.to_vec()
    }

    #[getter]
    fn t(&self) -> Vec<f64> {
        self.inner.grid.t.to_vec()
    }

    #[getter]
    fn eta(&self) -> Vec<f64> {
        self.inner.eta.values().to_vec()
    }

    #[getter]
    fn q(&self) -> Vec<f64> {
        self.inner.q.values().to_vec()
    }

    #[getter]
    fn f(&self) -> Vec<f64> {
        self.inner.f.values().to_vec()
    }

    /// Average price; `None` where the mass has vanished.
    #[getter]
    fn pbar(&self) -> Vec<Option<f64>> {
        self.inner.pbar.clone()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn tau_final(&self) -> f64 {
        self.inner.tau_final
    }

    #[getter]
    fn residual_history(&self) -> Vec<f64> {
        self.inner.residual_history.clone()
    }

    /// Runs every invariant check and returns the report.
    fn audit<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let report = py.detach(|| audit_all(&self.inner));
        to_dict(py, &report)
    }

    fn __repr__(&self) -> String {
        format!(
            "Solution(nx={}, nt={}, converged={}, iterations={})",
            self.inner.grid.nx, self.inner.grid.nt, self.inner.converged, self.inner.iterations
        )
    }
}

fn config_or_default(config: Option<PyConfig>) -> RunConfig {
    config.map(|c| c.inner).unwrap_or_default()
}

/// Solves the coupled system with continuation.
#[pyfunction]
#[pyo3(signature = (config = None))]
fn solve(py: Python<'_>, config: Option<PyConfig>) -> PyResult<PySolution> {
    let c = config_or_default(config);
    let inner = py.detach(|| runner::solve(&c)).map_err(to_py_err)?;
    Ok(PySolution { inner })
}

/// Solves, audits and writes u.csv, m.csv, paths.csv and report.json to `out`.
#[pyfunction]
#[pyo3(signature = (out, config = None))]
fn run_solve<'py>(py: Python<'py>, out: PathBuf, config: Option<PyConfig>) -> PyResult<Bound<'py, PyDict>> {
    let c = config_or_default(config);
    let (_, report) = py.detach(|| runner::run_solve(&c, &out)).map_err(to_py_err)?;
    to_dict(py, &report)
}

/// Audits fields stored in the u.csv / m.csv layout.
#[pyfunction]
#[pyo3(signature = (u_path, m_path, config = None))]
fn audit_files<'py>(
    py: Python<'py>,
    u_path: PathBuf,
    m_path: PathBuf,
    config: Option<PyConfig>,
) -> PyResult<Bound<'py, PyDict>> {
    let c = config_or_default(config);
    let report = py.detach(|| runner::run_audit(&c, &u_path, &m_path, None)).map_err(to_py_err)?;
    to_dict(py, &report)
}

/// Solves from two constant initial guesses and reports the gaps.
#[pyfunction]
#[pyo3(signature = (config = None, q_a = 0.0, q_b = 1.0))]
fn uniqueness<'py>(py: Python<'py>, config: Option<PyConfig>, q_a: f64, q_b: f64) -> PyResult<Bound<'py, PyDict>> {
    let c = config_or_default(config);
    let report = py
        .detach(|| {
            let grid = build_grid(&c.params, &c.disc)?;
            uniqueness_experiment(
                &c.params,
                &c.disc,
                &ScalarPath::constant(&grid, q_a),
                &ScalarPath::constant(&grid, q_b),
            )
        })
        .map_err(to_py_err)?;
    to_dict(py, &report)
}

/// Error of the value solver against a manufactured solution;
/// `profile` is "linear" or "exponential".
#[pyfunction]
#[pyo3(signature = (nx, nt, profile = "linear", config = None))]
fn hjb_manufactured<'py>(
    py: Python<'py>,
    nx: usize,
    nt: usize,
    profile: &str,
    config: Option<PyConfig>,
) -> PyResult<Bound<'py, PyDict>> {
    let profile = match profile {
        "linear" => TimeProfile::Linear,
        "exponential" => TimeProfile::Exponential,
        other => return Err(PyValueError::new_err(format!("unknown profile `{other}`"))),
    };
    let c = config_or_default(config);
    let sample = py
        .detach(|| verification::hjb_manufactured(&c.params, nx, nt, profile))
        .map_err(to_py_err)?;
    to_dict(py, &sample)
}

/// Error of the density solver against a decaying eigenmode.
#[pyfunction]
#[pyo3(signature = (nx, nt, config = None))]
fn fp_eigenfunction<'py>(py: Python<'py>, nx: usize, nt: usize, config: Option<PyConfig>) -> PyResult<Bound<'py, PyDict>> {
    let c = config_or_default(config);
    let sample = py
        .detach(|| verification::fp_eigenfunction(&c.params, nx, nt))
        .map_err(to_py_err)?;
    to_dict(py, &sample)
}

/// Dyadic refinement study; same layout as orders.json.
#[pyfunction]
#[pyo3(signature = (config = None, levels = 3))]
fn convergence<'py>(py: Python<'py>, config: Option<PyConfig>, levels: usize) -> PyResult<Bound<'py, PyDict>> {
    let c = config_or_default(config);
    let report = py.detach(|| runner::convergence_study(&c, levels)).map_err(to_py_err)?;
    to_dict(py, &report)
}

#[pymodule]
fn bertrand_mfg_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(run_solve, m)?)?;
    m.add_function(wrap_pyfunction!(audit_files, m)?)?;
    m.add_function(wrap_pyfunction!(uniqueness, m)?)?;
    m.add_function(wrap_pyfunction!(hjb_manufactured, m)?)?;
    m.add_function(wrap_pyfunction!(fp_eigenfunction, m)?)?;
    m.add_function(wrap_pyfunction!(convergence, m)?)?;
    Ok(())
}
