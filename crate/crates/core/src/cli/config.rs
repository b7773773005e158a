use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dual::{SimplexUpdate, SolverConfig, StepSchedule, EMPIRICAL_MAX_ROUNDS};
use crate::empirical::SgdConfig;
use crate::error::{Error, Result};
use crate::linear::{LinearEstimator, LinearGaussianModel};
use crate::model::{make_grid, BinDistribution, NoiseGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    AnalyticLinear,
    SgdLinear,
}

impl Backend {
    pub fn as_str(&self) -> &'static str {
        match self {
            Backend::AnalyticLinear => "analytic-linear",
            Backend::SgdLinear => "sgd-linear",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    P1,
    P2,
    P1Log,
}

impl Problem {
    pub fn as_str(&self) -> &'static str {
        match self {
            Problem::P1 => "p1",
            Problem::P2 => "p2",
            Problem::P1Log => "p1-log",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub sigma_y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub bin_count: usize,
}

/// Testing distribution over the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PSpec {
    Uniform,
    PointMass { bin: usize },
    Weights { weights: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Constant,
    Diminishing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimplexRule {
    Project,
    Renormalize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverParams {
    /// Defaults to 200 (analytic) or 25 (sgd).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rounds: Option<usize>,
    #[serde(default = "default_schedule")]
    pub schedule: ScheduleKind,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_stop_tol")]
    pub stop_tol: f64,
    #[serde(default = "default_simplex")]
    pub simplex_update: SimplexRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_step_scale: Option<Vec<f64>>,
}

fn default_schedule() -> ScheduleKind {
    ScheduleKind::Constant
}
fn default_step() -> f64 {
    0.5
}
fn default_stop_tol() -> f64 {
    1e-6
}
fn default_simplex() -> SimplexRule {
    SimplexRule::Project
}
fn default_mc_samples() -> usize {
    100_000
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            max_rounds: None,
            schedule: default_schedule(),
            step: default_step(),
            stop_tol: default_stop_tol(),
            simplex_update: default_simplex(),
            bin_step_scale: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McParams {
    /// Samples per bin for every risk evaluation.
    #[serde(default = "default_mc_samples")]
    pub samples: usize,
}

impl Default for McParams {
    fn default() -> Self {
        McParams {
            samples: default_mc_samples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgdParams {
    pub epochs_per_round: usize,
    pub batches_per_epoch: usize,
    pub batch_size: usize,
    pub step_size: f64,
    pub diminishing: bool,
    /// Gain the first round warm-starts from.
    pub init_gain: f64,
}

impl Default for SgdParams {
    fn default() -> Self {
        let d = SgdConfig::default();
        SgdParams {
            epochs_per_round: d.epochs_per_round,
            batches_per_epoch: d.batches_per_epoch,
            batch_size: d.batch_size,
            step_size: d.step_size,
            diminishing: d.diminishing,
            init_gain: 1.0,
        }
    }
}

/// One experiment, read from a TOML file. See `configs/linear_p1.toml` at the repository root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub backend: Backend,
    pub problem: Problem,
    /// Required for p1 and p1-log, rejected for p2. `inf` is allowed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    pub model: ModelParams,
    pub grid: GridParams,
    #[serde(default = "default_p")]
    pub p: PSpec,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default)]
    pub mc: McParams,
    #[serde(default)]
    pub sgd: SgdParams,
}

fn default_p() -> PSpec {
    PSpec::Uniform
}

fn invalid(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Checks every cross-field rule. All failures map to [`Error::Config`].
    pub fn validate(&self) -> Result<()> {
        match (self.problem, self.epsilon) {
            (Problem::P2, Some(_)) => return Err(Error::Config("p2 does not take an epsilon".into())),
            (Problem::P1 | Problem::P1Log, None) => {
                return Err(Error::Config(format!("{} requires epsilon", self.problem.as_str())))
            }
            _ => {}
        }
        self.model_params()?;
        let grid = self.noise_grid()?;
        self.testing_distribution(&grid)?;
        self.solver_config()?;
        if let Some(scale) = &self.solver.bin_step_scale {
            grid.check_len(scale.len()).map_err(invalid)?;
        }
        if self.backend == Backend::SgdLinear {
            self.sgd_config().validate()?;
            if !self.sgd.init_gain.is_finite() {
                return Err(Error::Config("sgd init_gain must be finite".into()));
            }
        }
        if self.mc.samples < 2 {
            return Err(Error::Config("mc samples must be at least 2".into()));
        }
        Ok(())
    }

    pub fn model_params(&self) -> Result<LinearGaussianModel> {
        LinearGaussianModel::new(self.model.sigma_y).map_err(invalid)
    }

    pub fn noise_grid(&self) -> Result<NoiseGrid> {
        make_grid(self.grid.sigma_min, self.grid.sigma_max, self.grid.bin_count).map_err(invalid)
    }

    pub fn testing_distribution(&self, grid: &NoiseGrid) -> Result<BinDistribution> {
        match &self.p {
            PSpec::Uniform => Ok(BinDistribution::uniform(grid)),
            PSpec::PointMass { bin } => BinDistribution::point_mass(grid, *bin),
            PSpec::Weights { weights } => grid
                .check_len(weights.len())
                .and_then(|_| BinDistribution::multiplier(grid, weights.clone()))
                .and_then(|raw| crate::model::normalize(&raw)),
        }
        .map_err(invalid)
    }

    pub fn max_rounds(&self) -> usize {
        self.solver.max_rounds.unwrap_or(match self.backend {
            Backend::AnalyticLinear => SolverConfig::default().max_rounds,
            Backend::SgdLinear => EMPIRICAL_MAX_ROUNDS,
        })
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let schedule = match self.solver.schedule {
            ScheduleKind::Constant => StepSchedule::Constant(self.solver.step),
            ScheduleKind::Diminishing => StepSchedule::Diminishing(self.solver.step),
        };
        let cfg = SolverConfig {
            epsilon: self.epsilon.unwrap_or(f64::INFINITY),
            max_rounds: self.max_rounds(),
            schedule,
            stop_tol: self.solver.stop_tol,
            log_scale: self.problem == Problem::P1Log,
            seed: self.seed,
            bin_step_scale: self.solver.bin_step_scale.clone(),
            simplex_update: match self.solver.simplex_update {
                SimplexRule::Project => SimplexUpdate::Project,
                SimplexRule::Renormalize => SimplexUpdate::Renormalize,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn sgd_config(&self) -> SgdConfig {
        SgdConfig {
            epochs_per_round: self.sgd.epochs_per_round,
            batches_per_epoch: self.sgd.batches_per_epoch,
            batch_size: self.sgd.batch_size,
            step_size: self.sgd.step_size,
            diminishing: self.sgd.diminishing,
            seed: self.seed,
        }
    }

    pub fn sgd_init(&self) -> LinearEstimator {
        LinearEstimator::new(self.sgd.init_gain)
    }
}
