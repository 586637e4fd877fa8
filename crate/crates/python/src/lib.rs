//! Python bindings over `wpdm_core`.
//!
//! Structured results cross the boundary as plain dicts and lists, built
//! from the serde representation of the core types.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde_json::Value;
use wpdm_core::noise::NoiseKind;
use wpdm_core::sim::{self, RunOptions, ScenarioConfig, Stage};
use wpdm_core::{metrics, wavelet, Error};

fn config_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: Error) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py(obj: &Bound<'_, PyAny>) -> PyResult<Value> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Scenario configuration. Unknown keys and invalid values raise `ValueError`.
#[pyclass(name = "Config", module = "wpdm", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: ScenarioConfig,
}

#[pymethods]
impl PyConfig {
    /// Parses TOML text; the empty string gives the reference scenario.
    #[new]
    #[pyo3(signature = (toml = ""))]
    fn new(toml: &str) -> PyResult<Self> {
        ScenarioConfig::from_toml_str(toml).map(|inner| Self { inner }).map_err(config_err)
    }

    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        ScenarioConfig::from_file(&path).map(|inner| Self { inner }).map_err(config_err)
    }

    /// Copy with the given fields replaced, e.g. `cfg.replace(trials_per_point=100)`.
    #[pyo3(signature = (**changes))]
    fn replace(&self, changes: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut value = serde_json::to_value(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        if let (Some(changes), Value::Object(map)) = (changes, &mut value) {
            if let Value::Object(new) = from_py(changes.as_any())? {
                map.extend(new);
            }
        }
        let inner: ScenarioConfig = serde_json::from_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
        inner.validate().map_err(config_err)?;
        Ok(Self { inner })
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml_string()
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    /// SHA-256 of the canonical TOML form.
    fn hash(&self) -> String {
        self.inner.hash()
    }

    #[getter]
    fn trials_per_point(&self) -> usize {
        self.inner.trials_per_point
    }

    #[getter]
    fn master_seed(&self) -> u64 {
        self.inner.master_seed
    }

    #[getter]
    fn snr_grid_db(&self) -> Vec<f64> {
        self.inner.snr_grid_db.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(groups={}, sensors={}, antennas={}, trials_per_point={}, hash={}…)",
            self.inner.groups,
            self.inner.sensors,
            self.inner.antennas,
            self.inner.trials_per_point,
            &self.inner.hash()[..12]
        )
    }
}

/// Prepared codebooks and channel model for single-trial runs.
#[pyclass(name = "Scenario", module = "wpdm", frozen)]
struct PyScenario {
    inner: sim::Scenario,
}

#[pymethods]
impl PyScenario {
    #[new]
    fn new(config: &PyConfig) -> PyResult<Self> {
        sim::Scenario::new(config.inner.clone()).map(|inner| Self { inner }).map_err(config_err)
    }

    /// Curve labels in outcome order.
    fn labels<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.labels())
    }

    /// Total trial count over the SNR grid and both hypotheses.
    fn trials(&self) -> u64 {
        self.inner.trials()
    }

    fn run_trial<'py>(&self, py: Python<'py>, trial: u64) -> PyResult<Bound<'py, PyAny>> {
        let record = self.inner.run_trial(trial).map_err(runtime_err)?;
        to_py(py, &record)
    }
}

/// Runs a campaign and returns `{"roc": [...], "sweep": [...], "diagnostics": {...}}`.
/// With `out` set, the three output files are written there as well.
#[pyfunction]
#[pyo3(signature = (config, workers = None, out = None))]
fn run_campaign<'py>(
    py: Python<'py>,
    config: &PyConfig,
    workers: Option<usize>,
    out: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = config.inner.clone();
    let rs = py
        .detach(|| {
            let rs = sim::run_campaign(&cfg, &RunOptions { workers, progress: false })?;
            if let Some(dir) = &out {
                sim::persist_results(&rs, dir)?;
            }
            Ok::<_, Error>(rs)
        })
        .map_err(runtime_err)?;
    let dict = PyDict::new(py);
    dict.set_item("roc", to_py(py, &rs.roc)?)?;
    dict.set_item("sweep", to_py(py, &rs.sweep)?)?;
    dict.set_item("diagnostics", to_py(py, &rs.diagnostics)?)?;
    Ok(dict.into_any())
}

/// Gaussian tail probability.
#[pyfunction]
fn q_function(x: f64) -> f64 {
    metrics::q_function(x)
}

/// Lowpass and highpass prototype filter taps.
#[pyfunction]
#[pyo3(signature = (taps = 14, zeros = 2, bandwidth = std::f64::consts::SQRT_2))]
fn prototype_filters(taps: usize, zeros: usize, bandwidth: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let pair = wavelet::design_prototype_filters(taps, zeros, bandwidth).map_err(config_err)?;
    Ok((pair.h, pair.g))
}

#[pyfunction]
#[pyo3(signature = (taps = 14, zeros = 2, bandwidth = std::f64::consts::SQRT_2, groups = 4))]
fn filter_diagnostics<'py>(
    py: Python<'py>,
    taps: usize,
    zeros: usize,
    bandwidth: f64,
    groups: usize,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &sim::filter_diagnostics(taps, zeros, bandwidth, groups).map_err(config_err)?)
}

/// Empirical moments of a unit-variance noise generator.
#[pyfunction]
#[pyo3(signature = (kind = "class_a", impulse_probability = 0.3, bernoulli_probability = 0.3, samples = 1_000_000, seed = 0))]
fn calibrate_noise<'py>(
    py: Python<'py>,
    kind: &str,
    impulse_probability: f64,
    bernoulli_probability: f64,
    samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let kind: NoiseKind = kind.parse().map_err(config_err)?;
    let cfg = ScenarioConfig {
        impulse_probability,
        bernoulli_probability,
        ..ScenarioConfig::default()
    };
    let spec = cfg.noise_spec(kind, 1.0);
    spec.validate().map_err(config_err)?;
    let mut rng = sim::stage_rng(seed, 0, Stage::Calibration);
    let report = py.detach(|| sim::calibrate_noise(&spec, samples, &mut rng)).map_err(config_err)?;
    to_py(py, &report)
}

#[pymodule]
fn wpdm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(run_campaign, m)?)?;
    m.add_function(wrap_pyfunction!(q_function, m)?)?;
    m.add_function(wrap_pyfunction!(prototype_filters, m)?)?;
    m.add_function(wrap_pyfunction!(filter_diagnostics, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate_noise, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
