//! Dual ascent solvers for the training-distribution problems.
//!
//! * P1: minimize the overall risk `sum_i p_i R(f|sigma_i)` subject to
//!   `R(f|sigma_i) - r(sigma_i) <= epsilon` at every bin. The multiplier is an
//!   unnormalized `lambda >= 0` and training uses `pi ∝ p + lambda`.
//! * P1 on the log scale: the constraint becomes
//!   `R(f|sigma_i) / L_delta(sigma_i) <= 1 + epsilon` and training uses
//!   `pi ∝ p + lambda / L_delta`.
//! * P2: minimize the largest gap. The multiplier lives on the simplex and
//!   training uses `pi = lambda`.
//!
//! Each round trains once (the f-step), evaluates the conditional risk at
//! every bin, then takes a projected gradient step on the multiplier.

mod config;
mod p1;
mod p2;
mod simplex;

pub use config::{SimplexUpdate, SolverConfig, StepSchedule, EMPIRICAL_MAX_ROUNDS};
pub use p1::{epsilon_of_sigma, p1_f_step, p1_lambda_step, solve_p1, P1Solution};
pub use p2::{p2_f_step, p2_lambda_step, solve_p2, P2Solution};
pub use simplex::project_to_simplex;

use crate::error::{Error, Result};
use crate::model::{
    normalize, BaselineRiskTable, BinDistribution, GapProfile, RiskProfile, Trainer, NORMALIZATION_TOL,
};

/// One round of a dual ascent run.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub round: usize,
    /// Multiplier the f-step of this round was trained with.
    pub lambda: BinDistribution,
    /// Normalized sampling distribution actually used for training.
    pub pi: BinDistribution,
    pub risk: RiskProfile,
    /// Linear scale: `R - r`. Log scale: `R / L_delta - 1`.
    pub gap: GapProfile,
    pub dual_value: f64,
    /// Largest per-bin step applied after this round's f-step.
    pub step_size: f64,
}

/// Which dual function to evaluate.
#[derive(Debug, Clone, Copy)]
pub enum DualForm<'a> {
    /// `sum_i R_i (p_i + lambda_i) - sum_i thresholds_i lambda_i`.
    P1 {
        p: &'a BinDistribution,
        thresholds: &'a [f64],
    },
    /// `sum_i R_i (p_i + lambda_i / L_i) - (1 + epsilon) sum_i lambda_i`.
    P1Log {
        p: &'a BinDistribution,
        log_baseline: &'a BaselineRiskTable,
        epsilon: f64,
    },
    /// `sum_i (R_i - r_i) lambda_i` with `lambda` on the simplex.
    P2 { baseline: &'a BaselineRiskTable },
}

/// Dual function value given the risk profile of the f-step minimizer for `lambda`.
pub fn dual_value(lambda: &BinDistribution, risk: &RiskProfile, form: DualForm<'_>) -> Result<f64> {
    let grid = risk.grid();
    grid.ensure_same(lambda.grid())?;
    let r = risk.values();
    let l = lambda.weights();
    match form {
        DualForm::P1 { p, thresholds } => {
            grid.ensure_same(p.grid())?;
            grid.check_len(thresholds.len())?;
            Ok((0..r.len())
                .map(|i| r[i] * (p.weights()[i] + l[i]) - thresholds[i] * l[i])
                .sum())
        }
        DualForm::P1Log {
            p,
            log_baseline,
            epsilon,
        } => {
            grid.ensure_same(p.grid())?;
            grid.ensure_same(log_baseline.grid())?;
            let norm = log_baseline.values();
            check_positive(norm)?;
            Ok((0..r.len())
                .map(|i| r[i] * (p.weights()[i] + l[i] / norm[i]) - (1.0 + epsilon) * l[i])
                .sum())
        }
        DualForm::P2 { baseline } => {
            grid.ensure_same(baseline.grid())?;
            let sum = lambda.total();
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::Unnormalized { sum });
            }
            Ok((0..r.len()).map(|i| (r[i] - baseline.values()[i]) * l[i]).sum())
        }
    }
}

/// Training weights `p + lambda / L_delta`, normalized.
pub fn log_scale_weights(
    p: &BinDistribution,
    lambda: &BinDistribution,
    log_baseline: &BaselineRiskTable,
) -> Result<BinDistribution> {
    p.grid().ensure_same(lambda.grid())?;
    p.grid().ensure_same(log_baseline.grid())?;
    let norm = log_baseline.values();
    check_positive(norm)?;
    let raw = p
        .weights()
        .iter()
        .zip(lambda.weights())
        .zip(norm)
        .map(|((pi, li), ni)| pi + li / ni)
        .collect();
    normalize(&BinDistribution::multiplier(p.grid(), raw)?)
}

fn check_positive(values: &[f64]) -> Result<()> {
    if let Some((bin, v)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::Domain(format!(
            "log-scale normalizer must be positive, got {v} at bin {bin}"
        )));
    }
    Ok(())
}

/// Trains under `weights` (normalized first) and evaluates on the weights' grid.
pub(crate) fn train_and_evaluate<T: Trainer>(
    trainer: &mut T,
    weights: &BinDistribution,
    train_seed: u64,
    eval_seed: u64,
) -> Result<(T::Estimator, RiskProfile, BinDistribution)> {
    let pi = normalize(weights)?;
    let estimator = trainer.train(&pi, train_seed)?;
    let risk = trainer.evaluate(&estimator, pi.grid(), eval_seed)?;
    pi.grid().ensure_same(risk.grid())?;
    Ok((estimator, risk, pi))
}

// Stream identifiers for per-round seed derivation.
pub(crate) const TRAIN_STREAM: u64 = 0x7472_6169_6e00_0000;
pub(crate) const EVAL_STREAM: u64 = 0x6576_616c_0000_0000;

pub(crate) fn round_seeds(seed: u64, round: usize) -> (u64, u64) {
    use crate::empirical::derive_seed;
    (
        derive_seed(seed, round as u64, TRAIN_STREAM),
        derive_seed(seed, round as u64, EVAL_STREAM),
    )
}
