use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{Backend, ExperimentConfig, Problem};
use super::record::{RoundRow, RunRecord, RunSummary};
use super::report::emit_report;
use crate::dual::{solve_p1, solve_p2, DualState};
use crate::empirical::{derive_seed, mc_log_baseline, SgdLinearTrainer};
use crate::error::{Error, Result};
use crate::linear::oracle::{oracle_min_max_linear, oracle_solve_p1_linear};
use crate::linear::{
    baseline_table, best_individual_risk, log_baseline_closed_form, AnalyticLinearTrainer, LinearEstimator,
    LinearGaussianModel,
};
use crate::model::{psnr_from_mse, BaselineRiskTable, BinDistribution, NoiseGrid, Trainer};

pub const ORACLE_FILE: &str = "oracle.toml";

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_IO: i32 = 4;

// seed stream for the Monte Carlo log-scale normalizer
const LOG_BASELINE_STREAM: u64 = 0x6c6f_6762_6173_6500;

const NOT_CONVERGED_ADVICE: &str = "no convergence within the round limit; epsilon may be below epsilon_min \
     (solve p2 first to find it) or the step size may be too large";

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::TomlDe(_) => EXIT_CONFIG,
        Error::Io(_) | Error::Csv(_) | Error::TomlSer(_) | Error::Record(_) => EXIT_IO,
        Error::Infeasible { .. } => EXIT_NOT_CONVERGED,
        _ => EXIT_OTHER,
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub record: RunRecord,
}

impl RunOutcome {
    pub fn converged(&self) -> bool {
        self.record.summary.converged
    }

    pub fn exit_code(&self) -> i32 {
        if self.converged() {
            EXIT_OK
        } else {
            EXIT_NOT_CONVERGED
        }
    }
}

/// Runs the configured solver and returns the record without touching disk.
pub fn execute(config: &ExperimentConfig) -> Result<RunRecord> {
    config.validate()?;
    let model = config.model_params()?;
    let grid = config.noise_grid()?;
    let p = config.testing_distribution(&grid)?;
    match config.backend {
        Backend::AnalyticLinear => {
            let mut trainer = AnalyticLinearTrainer::new(model);
            let table = match config.problem {
                Problem::P1Log => log_baseline_closed_form(&model, &grid)?,
                _ => baseline_table(&model, &grid)?,
            };
            solve(config, &mut trainer, &model, &grid, &p, &table)
        }
        Backend::SgdLinear => {
            let mut trainer =
                SgdLinearTrainer::new(model, config.sgd_config(), config.mc.samples, config.sgd_init())?;
            let table = match config.problem {
                Problem::P1Log => {
                    let seed = derive_seed(config.seed, 0, LOG_BASELINE_STREAM);
                    mc_log_baseline(&model, &grid, config.mc.samples, seed)?.0
                }
                _ => baseline_table(&model, &grid)?,
            };
            solve(config, &mut trainer, &model, &grid, &p, &table)
        }
    }
}

/// Runs the solver, then writes the record and the report into `output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome> {
    let record = execute(config)?;
    record.write(&config.output_dir)?;
    emit_report(&record, &config.output_dir)?;
    Ok(RunOutcome { record })
}

fn solve<T: Trainer<Estimator = LinearEstimator>>(
    config: &ExperimentConfig,
    trainer: &mut T,
    model: &LinearGaussianModel,
    grid: &NoiseGrid,
    p: &BinDistribution,
    table: &BaselineRiskTable,
) -> Result<RunRecord> {
    let solver = config.solver_config()?;
    let (history, summary) = match config.problem {
        Problem::P1 | Problem::P1Log => {
            let sol = solve_p1(trainer, p, table, &solver)?;
            let overall_risk = sol.overall_risk(p)?;
            let summary = RunSummary {
                converged: sol.converged,
                rounds: sol.rounds(),
                overall_risk,
                max_gap: sol.max_gap(),
                duality_gap: sol.duality_gap(p)?,
                final_gain: sol.estimator.gain,
                epsilon_min: None,
                epsilon_min_best: None,
                gap_spread: None,
                support_gap_spread: None,
                advisory: (!sol.converged).then(|| NOT_CONVERGED_ADVICE.to_string()),
            };
            (sol.history, summary)
        }
        Problem::P2 => {
            let sol = solve_p2(trainer, table, &solver)?;
            let last = sol.final_state();
            let summary = RunSummary {
                converged: sol.converged,
                rounds: sol.rounds(),
                overall_risk: last.risk.overall(p)?,
                max_gap: last.gap.max(),
                duality_gap: last.gap.max() - last.dual_value,
                final_gain: sol.estimator.gain,
                epsilon_min: Some(sol.epsilon_min),
                epsilon_min_best: Some(sol.epsilon_min_best),
                gap_spread: Some(sol.gap_spread),
                support_gap_spread: Some(sol.support_gap_spread),
                advisory: (!sol.converged)
                    .then(|| "no convergence within the round limit; try a smaller step or more rounds".to_string()),
            };
            (sol.history, summary)
        }
    };
    let rows = rows_from_history(model, grid, &history)?;
    let record = RunRecord {
        config: config.clone(),
        rows,
        summary,
    };
    record.check()?;
    Ok(record)
}

fn rows_from_history(model: &LinearGaussianModel, grid: &NoiseGrid, history: &[DualState]) -> Result<Vec<RoundRow>> {
    let best_psnr = grid
        .representatives()
        .iter()
        .map(|&s| psnr_from_mse(best_individual_risk(model, s)))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(history.len() * grid.bin_count());
    for state in history {
        let stderr = state.risk.stderr();
        for (bin, &sigma) in grid.representatives().iter().enumerate() {
            let risk = state.risk.values()[bin];
            let psnr = psnr_from_mse(risk)?;
            rows.push(RoundRow {
                round: state.round,
                bin,
                sigma,
                lambda: state.lambda.weights()[bin],
                pi: state.pi.weights()[bin],
                risk,
                risk_stderr: stderr.map_or(0.0, |s| s[bin]),
                gap: state.gap.values()[bin],
                psnr,
                psnr_gap: best_psnr[bin] - psnr,
            });
        }
    }
    Ok(rows)
}

/// Brute-force reference solution for the configured linear problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub problem: Problem,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub feasible: bool,
    pub epsilon_min: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_bar_sq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overall_risk: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_gap: Option<f64>,
}

impl OracleReport {
    pub fn exit_code(&self) -> i32 {
        if self.feasible {
            EXIT_OK
        } else {
            EXIT_NOT_CONVERGED
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(ORACLE_FILE), toml::to_string(self)?)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        toml::from_str(&fs::read_to_string(dir.join(ORACLE_FILE))?).map_err(|e| Error::Record(e.to_string()))
    }
}

/// Computes the oracle answer for the configured problem (no disk access).
/// An infeasible epsilon yields a report with `feasible == false`.
pub fn oracle_for(config: &ExperimentConfig) -> Result<OracleReport> {
    config.validate()?;
    if config.backend != Backend::AnalyticLinear {
        return Err(Error::Config("the oracle needs the analytic-linear backend".into()));
    }
    let model = config.model_params()?;
    let grid = config.noise_grid()?;
    let p = config.testing_distribution(&grid)?;
    let solved = match config.problem {
        Problem::P1 => oracle_solve_p1_linear(&model, &p, config.epsilon.expect("validated")),
        Problem::P2 => oracle_min_max_linear(&model, &p),
        Problem::P1Log => return Err(Error::Config("the oracle covers p1 and p2 only".into())),
    };
    let report = match solved {
        Ok(sol) => OracleReport {
            problem: config.problem,
            epsilon: config.epsilon,
            feasible: true,
            epsilon_min: sol.epsilon_min,
            sigma_bar_sq: Some(sol.sigma_bar_sq),
            gain: Some(sol.estimator.gain),
            overall_risk: Some(sol.overall_risk),
            max_gap: Some(sol.max_gap),
        },
        Err(Error::Infeasible { epsilon_min, .. }) => OracleReport {
            problem: config.problem,
            epsilon: config.epsilon,
            feasible: false,
            epsilon_min,
            sigma_bar_sq: None,
            gain: None,
            overall_risk: None,
            max_gap: None,
        },
        Err(e) => return Err(e),
    };
    Ok(report)
}

/// Runs the oracle and writes `oracle.toml` into `output_dir`.
pub fn run_oracle(config: &ExperimentConfig) -> Result<OracleReport> {
    let report = oracle_for(config)?;
    report.write(&config.output_dir)?;
    Ok(report)
}
