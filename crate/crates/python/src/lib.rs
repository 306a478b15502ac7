//! Python bindings. Commands take the same TOML text as `levy-occ --config`
//! and return lists of row dicts with the CLI's field names.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use levy_occupation::cli;
use levy_occupation::config::{ExperimentConfig, Overrides};
use levy_occupation::exponents::{self, BernsteinFamily, BernsteinSpec};
use levy_occupation::functionals;
use levy_occupation::{CharacteristicExponent, Error};

fn py_err(e: Error) -> PyErr {
    if e.is_config_error() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// Serde value → Python object through the stdlib `json` module.
fn to_py<'py, T: Serialize + ?Sized>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn load(config: &str, seed: Option<u64>) -> PyResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_toml(config).map_err(py_err)?;
    cfg.apply(&Overrides {
        seed,
        ..Default::default()
    });
    cfg.validate().map_err(py_err)?;
    Ok(cfg)
}

/// A symmetric characteristic exponent.
#[pyclass(name = "Exponent", frozen)]
struct PyExponent {
    inner: CharacteristicExponent,
}

#[pymethods]
impl PyExponent {
    #[staticmethod]
    #[pyo3(signature = (c = 1.0))]
    fn brownian(c: f64) -> PyResult<Self> {
        CharacteristicExponent::brownian(c).map(|inner| Self { inner }).map_err(py_err)
    }

    #[staticmethod]
    fn stable(alpha: f64) -> PyResult<Self> {
        CharacteristicExponent::symmetric_stable(alpha).map(|inner| Self { inner }).map_err(py_err)
    }

    #[staticmethod]
    fn relativistic(m: f64, alpha: f64) -> PyResult<Self> {
        CharacteristicExponent::relativistic(m, alpha).map(|inner| Self { inner }).map_err(py_err)
    }

    /// Brownian motion time-changed by a gamma subordinator.
    #[staticmethod]
    fn gamma_subordinated(scale: f64, rate: f64) -> PyResult<Self> {
        BernsteinSpec::from_family(BernsteinFamily::Gamma { scale, rate })
            .map(|s| Self {
                inner: CharacteristicExponent::subordinated(s),
            })
            .map_err(py_err)
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label()
    }

    fn __call__(&self, x: f64) -> PyResult<f64> {
        self.inner.evaluate(x).map_err(py_err)
    }

    /// `lim Ψ(x)/x²` at the origin.
    fn curvature_limit(&self) -> PyResult<f64> {
        exponents::curvature_limit(&self.inner).map_err(py_err)
    }

    fn classify<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &exponents::classify_conditions(&self.inner))
    }

    fn __repr__(&self) -> String {
        format!("Exponent({})", self.inner.label())
    }
}

/// `E I(t)^k` of the half-normal limit.
#[pyfunction]
fn limit_moment(ell: f64, t: f64, k: u32) -> f64 {
    functionals::limit_moment(ell, t, k)
}

#[pyfunction]
#[pyo3(signature = (config = ""))]
fn classify<'py>(py: Python<'py>, config: &str) -> PyResult<Bound<'py, PyAny>> {
    let cfg = load(config, None)?;
    to_py(py, &cli::cmd_classify(&cfg).map_err(py_err)?)
}

#[pyfunction]
#[pyo3(signature = (config = ""))]
fn density<'py>(py: Python<'py>, config: &str) -> PyResult<Bound<'py, PyAny>> {
    let cfg = load(config, None)?;
    let out = py.detach(|| cli::cmd_density(&cfg)).map_err(py_err)?;
    to_py(py, &out.rows)
}

/// Moment rows; a violated moment bound raises.
#[pyfunction]
#[pyo3(signature = (config = "", seed = None))]
fn moments<'py>(py: Python<'py>, config: &str, seed: Option<u64>) -> PyResult<Bound<'py, PyAny>> {
    let cfg = load(config, seed)?;
    let (study, failures) = py.detach(|| cli::cmd_moments(&cfg)).map_err(py_err)?;
    if !failures.is_empty() {
        return Err(PyRuntimeError::new_err(failures.join("\n")));
    }
    to_py(py, &study.reports)
}

/// `{"rows": [...], "summary": {...}, "failures": [...]}`.
#[pyfunction]
#[pyo3(signature = (config = "", seed = None))]
fn decompose<'py>(py: Python<'py>, config: &str, seed: Option<u64>) -> PyResult<Bound<'py, PyAny>> {
    let cfg = load(config, seed)?;
    let (out, summary) = py.detach(|| cli::cmd_decompose(&cfg)).map_err(py_err)?;
    to_py(
        py,
        &serde_json::json!({ "rows": out.rows, "summary": summary, "failures": out.failures }),
    )
}

/// Property-suite rows (name, observed, expected, tolerance, passed, detail).
#[pyfunction]
#[pyo3(signature = (config = "", seed = None, inject_failure = None))]
fn verify<'py>(
    py: Python<'py>,
    config: &str,
    seed: Option<u64>,
    inject_failure: Option<String>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = load(config, seed)?;
    let out = py.detach(|| cli::cmd_verify(&cfg, inject_failure)).map_err(py_err)?;
    to_py(py, &out.rows)
}

#[pymodule]
fn pylevy(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyExponent>()?;
    m.add_function(wrap_pyfunction!(limit_moment, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(density, m)?)?;
    m.add_function(wrap_pyfunction!(moments, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
