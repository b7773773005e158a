//! Python bindings for `noisealloc`.
//!
//! Grids are `NoiseGrid` objects; distributions cross the boundary as plain
//! lists of per-bin weights and are normalized on the way in.

use std::path::PathBuf;

use noisealloc::cli::{self, ExperimentConfig};
use noisealloc::dual::{self, SimplexUpdate, SolverConfig, StepSchedule};
use noisealloc::linear::{self, oracle, AnalyticLinearTrainer, LinearEstimator, LinearGaussianModel};
use noisealloc::model::{self, BinDistribution};
use noisealloc::Error;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

create_exception!(noisealloc_py, NoiseAllocError, PyValueError);
create_exception!(noisealloc_py, InfeasibleError, NoiseAllocError);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Infeasible { .. } => InfeasibleError::new_err(e.to_string()),
        other => NoiseAllocError::new_err(other.to_string()),
    }
}

/// Equal-width bins over `[sigma_min, sigma_max]`, represented by their midpoints.
#[pyclass(name = "NoiseGrid", frozen)]
struct PyNoiseGrid(model::NoiseGrid);

#[pymethods]
impl PyNoiseGrid {
    #[new]
    fn new(sigma_min: f64, sigma_max: f64, bin_count: usize) -> PyResult<Self> {
        model::make_grid(sigma_min, sigma_max, bin_count).map(Self).map_err(py_err)
    }

    #[getter]
    fn sigma_min(&self) -> f64 {
        self.0.sigma_min()
    }

    #[getter]
    fn sigma_max(&self) -> f64 {
        self.0.sigma_max()
    }

    #[getter]
    fn bin_count(&self) -> usize {
        self.0.bin_count()
    }

    #[getter]
    fn representatives(&self) -> Vec<f64> {
        self.0.representatives().to_vec()
    }

    fn bin_edges(&self, bin: usize) -> PyResult<(f64, f64)> {
        self.0.bin_edges(bin).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.0.bin_count()
    }

    fn __repr__(&self) -> String {
        format!("NoiseGrid({}, {}, {})", self.0.sigma_min(), self.0.sigma_max(), self.0.bin_count())
    }
}

impl PyNoiseGrid {
    fn distribution(&self, weights: Vec<f64>) -> PyResult<BinDistribution> {
        BinDistribution::from_raw(&self.0, weights).map_err(py_err)
    }
}

/// Scalar Gaussian signal observed in additive Gaussian noise, denoised by `a * x`.
#[pyclass(name = "LinearModel", frozen)]
struct PyLinearModel(LinearGaussianModel);

#[pymethods]
impl PyLinearModel {
    #[new]
    fn new(sigma_y: f64) -> PyResult<Self> {
        LinearGaussianModel::new(sigma_y).map(Self).map_err(py_err)
    }

    #[getter]
    fn sigma_y(&self) -> f64 {
        self.0.sigma_y()
    }

    /// Mean squared error of gain `gain` at noise level `sigma`.
    fn conditional_risk(&self, gain: f64, sigma: f64) -> f64 {
        linear::conditional_risk_closed_form(&self.0, &LinearEstimator::new(gain), sigma)
    }

    /// Risk of the estimator trained at `sigma` alone.
    fn best_risk(&self, sigma: f64) -> f64 {
        linear::best_individual_risk(&self.0, sigma)
    }

    fn effective_variance(&self, grid: &PyNoiseGrid, weights: Vec<f64>) -> PyResult<f64> {
        linear::effective_variance(&grid.distribution(weights)?).map_err(py_err)
    }

    /// Gain minimizing the risk averaged under `weights`.
    fn train(&self, grid: &PyNoiseGrid, weights: Vec<f64>) -> PyResult<f64> {
        Ok(linear::train_closed_form(&self.0, &grid.distribution(weights)?).map_err(py_err)?.gain)
    }

    fn risk_profile(&self, gain: f64, grid: &PyNoiseGrid) -> PyResult<Vec<f64>> {
        Ok(linear::risk_profile(&self.0, &LinearEstimator::new(gain), &grid.0)
            .map_err(py_err)?
            .values()
            .to_vec())
    }

    /// Per-bin risk of the best individual estimator.
    fn baseline(&self, grid: &PyNoiseGrid) -> PyResult<Vec<f64>> {
        Ok(linear::baseline_table(&self.0, &grid.0).map_err(py_err)?.values().to_vec())
    }

    /// Per-bin `exp(E[log loss])` of the best individual estimator.
    fn log_baseline(&self, grid: &PyNoiseGrid) -> PyResult<Vec<f64>> {
        Ok(linear::log_baseline_closed_form(&self.0, &grid.0).map_err(py_err)?.values().to_vec())
    }

    fn __repr__(&self) -> String {
        format!("LinearModel(sigma_y={})", self.0.sigma_y())
    }
}

/// Grid-search reference solution.
#[pyclass(name = "OracleResult", frozen, get_all)]
struct PyOracleResult {
    sigma_bar_sq: f64,
    gain: f64,
    overall_risk: f64,
    max_gap: f64,
    epsilon_min: f64,
    gap: Vec<f64>,
}

impl From<oracle::OracleSolution> for PyOracleResult {
    fn from(s: oracle::OracleSolution) -> Self {
        Self {
            sigma_bar_sq: s.sigma_bar_sq,
            gain: s.estimator.gain,
            overall_risk: s.overall_risk,
            max_gap: s.max_gap,
            epsilon_min: s.epsilon_min,
            gap: s.gap.values().to_vec(),
        }
    }
}

/// Outcome of a dual ascent run on the analytic backend.
#[pyclass(name = "SolveResult", frozen, get_all)]
struct PySolveResult {
    converged: bool,
    rounds: usize,
    gain: f64,
    pi_star: Vec<f64>,
    lambda_star: Vec<f64>,
    risk: Vec<f64>,
    gap: Vec<f64>,
    max_gap: f64,
    dual_value: f64,
}

impl PySolveResult {
    fn new(converged: bool, rounds: usize, gain: f64, pi_star: &BinDistribution, last: &dual::DualState) -> Self {
        Self {
            converged,
            rounds,
            gain,
            pi_star: pi_star.weights().to_vec(),
            lambda_star: last.lambda.weights().to_vec(),
            risk: last.risk.values().to_vec(),
            gap: last.gap.values().to_vec(),
            max_gap: last.gap.max(),
            dual_value: last.dual_value,
        }
    }
}

#[pyfunction]
fn oracle_p1(model: &PyLinearModel, grid: &PyNoiseGrid, p: Vec<f64>, epsilon: f64) -> PyResult<PyOracleResult> {
    oracle::oracle_solve_p1_linear(&model.0, &grid.distribution(p)?, epsilon)
        .map(Into::into)
        .map_err(py_err)
}

#[pyfunction]
fn oracle_min_max(model: &PyLinearModel, grid: &PyNoiseGrid) -> PyResult<PyOracleResult> {
    oracle::oracle_min_max_linear(&model.0, &BinDistribution::uniform(&grid.0))
        .map(Into::into)
        .map_err(py_err)
}

/// Minimizes the `p`-averaged risk with every gap kept within `epsilon`.
#[pyfunction]
#[pyo3(signature = (model, grid, p, epsilon, max_rounds = 200, step = 0.5, stop_tol = 1e-6))]
fn solve_p1(
    model: &PyLinearModel,
    grid: &PyNoiseGrid,
    p: Vec<f64>,
    epsilon: f64,
    max_rounds: usize,
    step: f64,
    stop_tol: f64,
) -> PyResult<PySolveResult> {
    let p = grid.distribution(p)?;
    let base = linear::baseline_table(&model.0, &grid.0).map_err(py_err)?;
    let cfg = SolverConfig {
        epsilon,
        max_rounds,
        schedule: StepSchedule::Constant(step),
        stop_tol,
        ..SolverConfig::default()
    };
    let sol = dual::solve_p1(&mut AnalyticLinearTrainer::new(model.0), &p, &base, &cfg).map_err(py_err)?;
    Ok(PySolveResult::new(sol.converged, sol.rounds(), sol.estimator.gain, &sol.pi_star, sol.final_state()))
}

/// Minimizes the largest gap; the returned `max_gap` is the smallest achievable one.
#[pyfunction]
#[pyo3(signature = (model, grid, max_rounds = 200, step = 0.5, stop_tol = 1e-6, project = true))]
fn solve_p2(
    model: &PyLinearModel,
    grid: &PyNoiseGrid,
    max_rounds: usize,
    step: f64,
    stop_tol: f64,
    project: bool,
) -> PyResult<PySolveResult> {
    let base = linear::baseline_table(&model.0, &grid.0).map_err(py_err)?;
    let cfg = SolverConfig {
        max_rounds,
        schedule: StepSchedule::Constant(step),
        stop_tol,
        simplex_update: if project { SimplexUpdate::Project } else { SimplexUpdate::Renormalize },
        ..SolverConfig::default()
    };
    let sol = dual::solve_p2(&mut AnalyticLinearTrainer::new(model.0), &base, &cfg).map_err(py_err)?;
    Ok(PySolveResult::new(sol.converged, sol.rounds(), sol.estimator.gain, &sol.pi_star, sol.final_state()))
}

/// Runs an experiment from TOML text, writes its record and returns the exit code.
#[pyfunction]
#[pyo3(signature = (config_toml, output_dir = None))]
fn run_experiment(config_toml: &str, output_dir: Option<PathBuf>) -> PyResult<i32> {
    let mut cfg = ExperimentConfig::from_toml_str(config_toml).map_err(py_err)?;
    if let Some(dir) = output_dir {
        cfg.output_dir = dir;
    }
    Ok(cli::run_experiment(&cfg).map_err(py_err)?.exit_code())
}

/// One-decimal percentage strings that sum to 100 within 0.1.
#[pyfunction]
fn format_percentages(weights: Vec<f64>) -> PyResult<Vec<String>> {
    cli::format_percentages(&weights).map_err(py_err)
}

#[pymodule]
fn noisealloc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNoiseGrid>()?;
    m.add_class::<PyLinearModel>()?;
    m.add_class::<PyOracleResult>()?;
    m.add_class::<PySolveResult>()?;
    m.add_function(wrap_pyfunction!(oracle_p1, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_min_max, m)?)?;
    m.add_function(wrap_pyfunction!(solve_p1, m)?)?;
    m.add_function(wrap_pyfunction!(solve_p2, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(format_percentages, m)?)?;
    m.add("NoiseAllocError", m.py().get_type::<NoiseAllocError>())?;
    m.add("InfeasibleError", m.py().get_type::<InfeasibleError>())?;
    Ok(())
}
