//! Python bindings: closed-form estimates, the exact oracle, Monte Carlo
//! estimates and figure CSV generation.

// pyo3 0.22 macro expansion trips this lint on `PyResult` returns.
#![allow(clippy::useless_conversion)]

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use trimol::experiments::{
    self, EstimateOptions, EstimatorSummary, ExperimentRecord, FigureOptions,
};
use trimol::formulas;
use trimol::oracle::{InitialDistribution, Oracle, StepLaw};
use trimol::{Boundary, DiffusionRates, Error, RateScaling, ReactionScheme};

create_exception!(trimol_py, StateSpaceCapError, PyRuntimeError);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::StateSpaceCap { .. } => StateSpaceCapError::new_err(e.to_string()),
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        e if e.is_validation() => PyValueError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

fn boundary(bc: &str) -> PyResult<Boundary> {
    bc.parse().map_err(py_err)
}

fn rates(du: f64, dv: f64, dw: f64) -> PyResult<DiffusionRates> {
    DiffusionRates::new(du, dv, dw).map_err(py_err)
}

fn init(mode: &str) -> PyResult<InitialDistribution> {
    match mode {
        "all" => Ok(InitialDistribution::UniformAll),
        "non-target" => Ok(InitialDistribution::UniformNonTarget),
        other => Err(PyValueError::new_err(format!(
            "init must be 'all' or 'non-target', got {other:?}"
        ))),
    }
}

fn scheme(k: f64, scaling: &str) -> PyResult<ReactionScheme> {
    let scaling: RateScaling = scaling.parse().map_err(py_err)?;
    ReactionScheme::new(trimol::Variant::UPlusVPlusW, k, scaling).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (length, h, du, dv, bc = "periodic"))]
fn bimol_collision_2d(length: f64, h: f64, du: f64, dv: f64, bc: &str) -> PyResult<f64> {
    formulas::bimol_collision_2d(length, h, du, dv, boundary(bc)?).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (length, dv, dw, bc = "periodic"))]
fn bimol_1d_limit(length: f64, dv: f64, dw: f64, bc: &str) -> PyResult<f64> {
    formulas::bimol_1d_limit(length, dv, dw, boundary(bc)?).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (length, h, du, dv, dw, bc = "periodic"))]
fn trimol_collision(length: f64, h: f64, du: f64, dv: f64, dw: f64, bc: &str) -> PyResult<f64> {
    formulas::trimol_collision(length, h, &rates(du, dv, dw)?, boundary(bc)?).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (length, h, du, dv, dw, k, scaling = "1d", bc = "periodic"))]
#[allow(clippy::too_many_arguments)]
fn trimol_reaction(
    length: f64,
    h: f64,
    du: f64,
    dv: f64,
    dw: f64,
    k: f64,
    scaling: &str,
    bc: &str,
) -> PyResult<f64> {
    formulas::trimol_reaction(
        length,
        h,
        &rates(du, dv, dw)?,
        &scheme(k, scaling)?,
        boundary(bc)?,
    )
    .map_err(py_err)
}

#[pyfunction]
fn nsteps_2d(n: usize) -> PyResult<f64> {
    formulas::nsteps_2d(n).map_err(py_err)
}

/// Expansion coefficients as a dict.
#[pyfunction]
fn montroll_coefficients(py: Python<'_>, du: f64, dv: f64, dw: f64) -> PyResult<Bound<'_, PyDict>> {
    let c = formulas::MontrollCoefficients::from_rates(&rates(du, dv, dw)?).map_err(py_err)?;
    let d = PyDict::new_bound(py);
    for (k, v) in [
        ("sigma1_sq", c.sigma1_sq),
        ("sigma2_sq", c.sigma2_sq),
        ("sigma3_sq", c.sigma3_sq),
        ("eta", c.eta),
        ("r", c.r),
        ("hat_sigma", c.hat_sigma),
        ("c1", c.c1),
        ("c2", c.c2),
        ("c3", c.c3),
    ] {
        d.set_item(k, v)?;
    }
    Ok(d)
}

#[pyfunction]
fn mean_exit_time_square(length: f64, diffusion: f64) -> PyResult<f64> {
    formulas::mean_exit_time_square(length, diffusion).map_err(py_err)
}

#[pyfunction]
fn encounter_time_1d_equal_rates(length: f64, diffusion: f64) -> PyResult<f64> {
    formulas::encounter_time_1d_equal_rates(length, diffusion).map_err(py_err)
}

/// Expected steps of a discrete walker on the periodic `k x k` lattice with
/// step probabilities split between the two axes and the diagonal.
#[pyfunction]
#[pyo3(signature = (k, axis_x = 0.5, axis_y = 0.5, diagonal = 0.0, init_mode = "all"))]
fn expected_steps_discrete_2d(
    k: usize,
    axis_x: f64,
    axis_y: f64,
    diagonal: f64,
    init_mode: &str,
) -> PyResult<f64> {
    let law = StepLaw::new(axis_x, axis_y, diagonal).map_err(py_err)?;
    Oracle::default()
        .expected_steps_discrete_2d(k, &law, init(init_mode)?)
        .map(|r| r.expected_time)
        .map_err(py_err)
}

/// One parameter point, evaluated by formula, oracle or Monte Carlo.
#[pyclass(name = "Experiment", module = "trimol_py")]
#[derive(Clone)]
struct PyExperiment {
    inner: experiments::Experiment,
}

#[pymethods]
impl PyExperiment {
    #[staticmethod]
    #[pyo3(signature = (length, k, du, dv, bc = "periodic"))]
    fn bimol_2d(length: f64, k: usize, du: f64, dv: f64, bc: &str) -> PyResult<Self> {
        let inner =
            experiments::Experiment::bimol_2d(length, k, boundary(bc)?, du, dv).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (length, k, dv, dw, bc = "periodic"))]
    fn bimol_1d(length: f64, k: usize, dv: f64, dw: f64, bc: &str) -> PyResult<Self> {
        let inner =
            experiments::Experiment::bimol_1d(length, k, boundary(bc)?, dv, dw).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (length, k, du, dv, dw, bc = "periodic"))]
    fn trimol(length: f64, k: usize, du: f64, dv: f64, dw: f64, bc: &str) -> PyResult<Self> {
        let inner = experiments::Experiment::trimol(length, k, boundary(bc)?, rates(du, dv, dw)?)
            .map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (length, k, du, dv, dw, rate, scaling = "1d", bc = "periodic"))]
    #[allow(clippy::too_many_arguments)]
    fn reaction(
        length: f64,
        k: usize,
        du: f64,
        dv: f64,
        dw: f64,
        rate: f64,
        scaling: &str,
        bc: &str,
    ) -> PyResult<Self> {
        let inner = experiments::Experiment::reaction(
            length,
            k,
            boundary(bc)?,
            rates(du, dv, dw)?,
            scheme(rate, scaling)?,
        )
        .map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.domain().h()
    }

    fn formula(&self) -> PyResult<f64> {
        self.inner.formula().map_err(py_err)
    }

    /// Raises `StateSpaceCapError` when the point is too large.
    fn oracle(&self) -> PyResult<f64> {
        self.inner.oracle(&Oracle::default()).map_err(py_err)
    }

    #[pyo3(signature = (n_trials, seed = experiments::DEFAULT_SEED, workers = None))]
    fn estimate(
        &self,
        py: Python<'_>,
        n_trials: u64,
        seed: u64,
        workers: Option<usize>,
    ) -> PyResult<Summary> {
        let spec = self.inner.sampler();
        let options = EstimateOptions {
            workers,
            ..Default::default()
        };
        py.allow_threads(|| experiments::estimate_with(&spec, n_trials, seed, options))
            .map(Summary::from)
            .map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Experiment({:?})", self.inner)
    }
}

#[pyclass(module = "trimol_py", get_all, frozen)]
struct Summary {
    mean: f64,
    std_error: f64,
    n_trials: u64,
    master_seed: u64,
    n_capped: u64,
}

impl From<EstimatorSummary> for Summary {
    fn from(s: EstimatorSummary) -> Self {
        Self {
            mean: s.mean,
            std_error: s.std_error,
            n_trials: s.n_trials,
            master_seed: s.master_seed,
            n_capped: s.n_capped,
        }
    }
}

#[pymethods]
impl Summary {
    fn confidence_interval(&self) -> (f64, f64) {
        let half = 1.96 * self.std_error;
        (self.mean - half, self.mean + half)
    }

    fn __repr__(&self) -> String {
        format!(
            "Summary(mean={}, std_error={}, n_trials={}, n_capped={})",
            self.mean, self.std_error, self.n_trials, self.n_capped
        )
    }
}

/// Writes `<out_dir>/<tag>.csv` and returns its path.
#[pyfunction]
#[pyo3(signature = (tag, out_dir, trials = experiments::DEFAULT_FIGURE_TRIALS, seed = experiments::DEFAULT_SEED, skip_mc = false))]
fn reproduce_figure(
    py: Python<'_>,
    tag: &str,
    out_dir: PathBuf,
    trials: u64,
    seed: u64,
    skip_mc: bool,
) -> PyResult<PathBuf> {
    let options = FigureOptions {
        trials,
        seed,
        skip_mc,
        ..Default::default()
    };
    py.allow_threads(|| experiments::reproduce_figure(tag, &out_dir, &options))
        .map_err(py_err)
}

fn record_dict<'py>(py: Python<'py>, r: &ExperimentRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new_bound(py);
    d.set_item("experiment_id", &r.experiment_id)?;
    d.set_item("figure_tag", &r.figure_tag)?;
    d.set_item("boundary", r.boundary.as_str())?;
    d.set_item("L", r.length)?;
    d.set_item("K", r.compartments)?;
    d.set_item("h", r.h())?;
    d.set_item("Du", r.du)?;
    d.set_item("Dv", r.dv)?;
    d.set_item("Dw", r.dw)?;
    d.set_item("k_value", r.k_value)?;
    d.set_item("scaling", r.scaling.map(|s| s.as_str()))?;
    d.set_item("estimator", r.estimator.as_str())?;
    d.set_item("mean", r.mean)?;
    d.set_item("std_error", r.std_error)?;
    d.set_item("n_trials", r.n_trials)?;
    d.set_item("seed", r.seed)?;
    Ok(d)
}

/// Reads a records CSV into a list of dicts; empty fields become `None`.
#[pyfunction]
fn read_records(py: Python<'_>, path: PathBuf) -> PyResult<Vec<Bound<'_, PyDict>>> {
    let records = experiments::read_records_from(&path).map_err(py_err)?;
    records.iter().map(|r| record_dict(py, r)).collect()
}

#[pymodule]
fn trimol_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add(
        "StateSpaceCapError",
        m.py().get_type_bound::<StateSpaceCapError>(),
    )?;
    m.add_class::<PyExperiment>()?;
    m.add_class::<Summary>()?;
    m.add_function(wrap_pyfunction!(bimol_collision_2d, m)?)?;
    m.add_function(wrap_pyfunction!(bimol_1d_limit, m)?)?;
    m.add_function(wrap_pyfunction!(trimol_collision, m)?)?;
    m.add_function(wrap_pyfunction!(trimol_reaction, m)?)?;
    m.add_function(wrap_pyfunction!(nsteps_2d, m)?)?;
    m.add_function(wrap_pyfunction!(montroll_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(mean_exit_time_square, m)?)?;
    m.add_function(wrap_pyfunction!(encounter_time_1d_equal_rates, m)?)?;
    m.add_function(wrap_pyfunction!(expected_steps_discrete_2d, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce_figure, m)?)?;
    m.add_function(wrap_pyfunction!(read_records, m)?)?;
    Ok(())
}
