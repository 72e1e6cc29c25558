//! Python bindings. Results are returned as plain dicts and lists built
//! from the serialized Rust values.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::de::DeserializeOwned;
use serde::Serialize;

use tripartite::ace::Method;
use tripartite::config::AnalysisConfig;
use tripartite::data::{load_dataset, validate_dataset, write_dataset};
use tripartite::ice::{cumulative_incidence, loe_timing_histogram, reclassify_dataset, IceCause};
use tripartite::ice_estimands::{ice_summary_table, proportion_diff as core_proportion_diff};
use tripartite::inference::bootstrap_battery;
use tripartite::sim::{self, BenchmarkOptions};
use tripartite::{AnalysisFrame, CovariateSchema, TrialDataset};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn from_py<T: DeserializeOwned>(py: Python<'_>, value: Option<&Bound<'_, PyAny>>) -> PyResult<T> {
    let text: String = match value {
        Some(v) => py.import("json")?.call_method1("dumps", (v,))?.extract()?,
        None => "{}".into(),
    };
    serde_json::from_str(&text).map_err(value_err)
}

fn analysis_config(py: Python<'_>, options: Option<&Bound<'_, PyDict>>) -> PyResult<AnalysisConfig> {
    from_py(py, options.map(|d| d.as_any()))
}

/// Subject-level trial data with its covariate schema.
#[pyclass(name = "Dataset", module = "tripartite_py", frozen)]
struct PyDataset {
    inner: TrialDataset,
}

#[pymethods]
impl PyDataset {
    /// Reads a dataset CSV; `schema` is the schema as TOML text.
    #[staticmethod]
    fn load(path: &str, schema: &str) -> PyResult<Self> {
        let schema: CovariateSchema = toml::from_str(schema).map_err(value_err)?;
        Ok(PyDataset { inner: load_dataset(path, &schema).map_err(value_err)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        write_dataset(&self.inner, path).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    fn schema_toml(&self) -> PyResult<String> {
        toml::to_string(self.inner.schema()).map_err(value_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn d_max(&self) -> f64 {
        self.inner.d_max()
    }

    /// Arm sizes and adherer counts.
    fn counts(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.counts())
    }

    fn validate(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &validate_dataset(&self.inner).violations)
    }

    /// Re-derives ICE causes from the disposition evidence. Returns the
    /// reclassified dataset and the per-subject classifications.
    #[pyo3(signature = (options=None))]
    fn reclassify(&self, py: Python<'_>, options: Option<&Bound<'_, PyDict>>) -> PyResult<(Self, Py<PyAny>)> {
        let cfg = analysis_config(py, options)?;
        let (ds, classes) = reclassify_dataset(&self.inner, &cfg.reclassify_options()).map_err(value_err)?;
        Ok((PyDataset { inner: ds }, to_py(py, &classes)?))
    }

    /// First-ICE proportions per cause with differences, intervals and
    /// tests, plus mean exposure by cause.
    #[pyo3(signature = (options=None))]
    fn ice_summary(&self, py: Python<'_>, options: Option<&Bound<'_, PyDict>>) -> PyResult<Py<PyAny>> {
        let cfg = analysis_config(py, options)?;
        let summary = ice_summary_table(&self.inner, cfg.alpha, cfg.ci_method, cfg.test_method).map_err(value_err)?;
        to_py(py, &summary)
    }

    /// Cumulative incidence of first ICEs of `cause` (`any`, `ae`, `loe`, `admin`).
    fn cumulative_incidence(&self, py: Python<'_>, cause: &str) -> PyResult<Py<PyAny>> {
        let cause: IceCause = cause.parse().map_err(value_err)?;
        to_py(py, &cumulative_incidence(&self.inner, cause))
    }

    fn loe_histogram(&self, py: Python<'_>, interval_weeks: f64) -> PyResult<Py<PyAny>> {
        to_py(py, &loe_timing_histogram(&self.inner, interval_weeks).map_err(value_err)?)
    }

    /// Point estimates of the estimator battery without resampling.
    #[pyo3(signature = (seed, options=None))]
    fn estimate_points(&self, py: Python<'_>, seed: u64, options: Option<&Bound<'_, PyDict>>) -> PyResult<Py<PyAny>> {
        let cfg = analysis_config(py, options)?;
        let frame = AnalysisFrame::from_dataset(&self.inner);
        let battery = py
            .detach(|| tripartite::ace::run_battery(&frame, &cfg.methods, &cfg.ace_options(), seed))
            .map_err(value_err)?;
        to_py(py, &battery)
    }

    /// Estimator battery with stratified percentile bootstrap intervals.
    #[pyo3(signature = (seed, options=None))]
    fn estimate(&self, py: Python<'_>, seed: u64, options: Option<&Bound<'_, PyDict>>) -> PyResult<Py<PyAny>> {
        let cfg = analysis_config(py, options)?;
        let frame = AnalysisFrame::from_dataset(&self.inner);
        let run = py
            .detach(|| bootstrap_battery(&frame, &cfg.methods, &cfg.ace_options(), &cfg.bootstrap_options(), seed))
            .map_err(value_err)?;
        to_py(py, &run.point)
    }
}

/// Generative model of a two-arm trial with both potential worlds.
#[pyclass(name = "SimulationSpec", module = "tripartite_py", frozen)]
struct PySimulationSpec {
    inner: sim::SimulationSpec,
}

#[pymethods]
impl PySimulationSpec {
    #[staticmethod]
    fn hba1c_like() -> Self {
        PySimulationSpec { inner: sim::SimulationSpec::hba1c_like() }
    }

    #[staticmethod]
    fn null_effect() -> Self {
        PySimulationSpec { inner: sim::SimulationSpec::null_effect() }
    }

    #[staticmethod]
    fn no_ice() -> Self {
        PySimulationSpec { inner: sim::SimulationSpec::no_ice() }
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let inner: sim::SimulationSpec = toml::from_str(text).map_err(value_err)?;
        inner.validate().map_err(value_err)?;
        Ok(PySimulationSpec { inner })
    }

    fn to_toml(&self) -> PyResult<String> {
        toml::to_string(&self.inner).map_err(value_err)
    }

    fn with_arm_size(&self, n_per_arm: usize) -> Self {
        PySimulationSpec { inner: self.inner.with_arm_size(n_per_arm) }
    }

    /// Shifts the experimental outcome intercept so that the oracle `S++`
    /// effect equals `target`. Returns the new spec and its oracle.
    fn with_stratum_effect(&self, py: Python<'_>, target: f64, draws: usize, seed: u64) -> PyResult<(Self, Py<PyAny>)> {
        let (spec, oracle) =
            py.detach(|| sim::with_stratum_effect(&self.inner, target, draws, seed)).map_err(value_err)?;
        Ok((PySimulationSpec { inner: spec }, to_py(py, &oracle)?))
    }

    /// Simulated observed dataset and the sample-level stratum effects.
    fn generate(&self, py: Python<'_>, seed: u64) -> PyResult<(PyDataset, Py<PyAny>)> {
        let (ds, truth) = sim::generate_trial(&self.inner, seed).map_err(value_err)?;
        Ok((PyDataset { inner: ds }, to_py(py, &truth.effects)?))
    }

    /// Monte Carlo population truths from `draws` subjects.
    fn oracle(&self, py: Python<'_>, draws: usize, seed: u64) -> PyResult<Py<PyAny>> {
        let oracle = py.detach(|| sim::oracle_truth(&self.inner, draws, seed)).map_err(value_err)?;
        to_py(py, &oracle)
    }

    /// Repeated-sampling performance of the battery against `oracle`.
    #[pyo3(signature = (oracle, reps, n_grid, seed, options=None))]
    fn benchmark(
        &self,
        py: Python<'_>,
        oracle: &Bound<'_, PyAny>,
        reps: usize,
        n_grid: Vec<usize>,
        seed: u64,
        options: Option<&Bound<'_, PyDict>>,
    ) -> PyResult<Py<PyAny>> {
        let oracle: sim::OracleTruth = from_py(py, Some(oracle))?;
        let cfg = analysis_config(py, options)?;
        let opts = BenchmarkOptions { reps, n_grid, methods: cfg.methods.clone(), ace: cfg.ace_options(), bootstrap: None };
        let report = py.detach(|| sim::run_benchmark(&self.inner, &oracle, &opts, seed)).map_err(value_err)?;
        to_py(py, &report)
    }
}

/// Difference in first-ICE proportions between arm 1 and arm 0.
#[pyfunction]
#[pyo3(signature = (x1, n1, x0, n0, alpha=0.05, ci_method="wald", test_method="fisher", cause="ae"))]
#[allow(clippy::too_many_arguments)]
fn proportion_diff(
    py: Python<'_>,
    x1: usize,
    n1: usize,
    x0: usize,
    n0: usize,
    alpha: f64,
    ci_method: &str,
    test_method: &str,
    cause: &str,
) -> PyResult<Py<PyAny>> {
    let cause: IceCause = cause.parse().map_err(value_err)?;
    let est = core_proportion_diff(
        cause,
        x1,
        n1,
        x0,
        n0,
        alpha,
        ci_method.parse().map_err(value_err)?,
        test_method.parse().map_err(value_err)?,
    )
    .map_err(value_err)?;
    to_py(py, &est)
}

/// Names of the available estimators.
#[pyfunction]
fn methods() -> Vec<&'static str> {
    Method::ALL.iter().map(|m| m.as_str()).collect()
}

#[pymodule]
fn tripartite_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PySimulationSpec>()?;
    m.add_function(wrap_pyfunction!(proportion_diff, m)?)?;
    m.add_function(wrap_pyfunction!(methods, m)?)?;
    Ok(())
}
