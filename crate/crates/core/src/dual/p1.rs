use super::{
    dual_value, log_scale_weights, round_seeds, train_and_evaluate, DualForm, DualState, SolverConfig,
};
use crate::error::Result;
use crate::model::{
    gap_profile, BaselineRiskTable, BinDistribution, GapProfile, RiskProfile, Trainer,
};

/// Per-bin constraint thresholds `r(sigma_i) + epsilon`.
pub fn epsilon_of_sigma(baseline: &BaselineRiskTable, epsilon: f64) -> Result<Vec<f64>> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(crate::error::Error::Domain(format!("epsilon must be >= 0, got {epsilon}")));
    }
    Ok(baseline.values().iter().map(|r| r + epsilon).collect())
}

/// Trains with sampling weights `normalize(p + lambda)` and evaluates the result.
pub fn p1_f_step<T: Trainer>(
    trainer: &mut T,
    p: &BinDistribution,
    lambda: &BinDistribution,
    seed: u64,
) -> Result<(T::Estimator, RiskProfile)> {
    p.require_normalized()?;
    p.grid().ensure_same(lambda.grid())?;
    let raw = p.weights().iter().zip(lambda.weights()).map(|(a, b)| a + b).collect();
    let weights = BinDistribution::multiplier(p.grid(), raw)?;
    let (est, risk, _) = train_and_evaluate(trainer, &weights, seed, seed)?;
    Ok((est, risk))
}

/// `lambda_i <- max(lambda_i + alpha (R_i - thresholds_i), 0)`.
pub fn p1_lambda_step(
    lambda: &BinDistribution,
    risk: &RiskProfile,
    thresholds: &[f64],
    alpha: f64,
) -> Result<BinDistribution> {
    lambda.grid().ensure_same(risk.grid())?;
    lambda.grid().check_len(thresholds.len())?;
    let violation: Vec<f64> = risk.values().iter().zip(thresholds).map(|(r, t)| r - t).collect();
    ascent_step(lambda, &violation, &vec![alpha; violation.len()])
}

fn ascent_step(lambda: &BinDistribution, violation: &[f64], alpha: &[f64]) -> Result<BinDistribution> {
    let next = lambda
        .weights()
        .iter()
        .zip(violation)
        .zip(alpha)
        .map(|((l, v), a)| (l + a * v).max(0.0))
        .collect();
    BinDistribution::multiplier(lambda.grid(), next)
}

#[derive(Debug, Clone)]
pub struct P1Solution<E> {
    /// Normalized `p + lambda*` (or `p + lambda*/L_delta` on the log scale).
    pub pi_star: BinDistribution,
    pub lambda_star: BinDistribution,
    /// Estimator trained under `pi_star`.
    pub estimator: E,
    pub history: Vec<DualState>,
    pub converged: bool,
}

impl<E> P1Solution<E> {
    pub fn final_state(&self) -> &DualState {
        self.history.last().expect("at least one round")
    }

    pub fn rounds(&self) -> usize {
        self.history.len()
    }

    pub fn overall_risk(&self, p: &BinDistribution) -> Result<f64> {
        self.final_state().risk.overall(p)
    }

    pub fn max_gap(&self) -> f64 {
        self.final_state().gap.max()
    }

    /// Primal objective minus dual value at the final multiplier.
    pub fn duality_gap(&self, p: &BinDistribution) -> Result<f64> {
        Ok(self.overall_risk(p)? - self.final_state().dual_value)
    }
}

/// Constraint data shared by the linear- and log-scale runs:
/// `violation_i = R_i / scale_i - threshold_i`.
struct Constraints<'a> {
    table: &'a BaselineRiskTable,
    log_scale: bool,
    epsilon: f64,
    thresholds: Vec<f64>,
    step_base: Vec<f64>,
}

impl<'a> Constraints<'a> {
    fn new(table: &'a BaselineRiskTable, cfg: &SolverConfig) -> Result<Self> {
        let n = table.values().len();
        let (thresholds, mut step_base) = if cfg.log_scale {
            // step of lambda_i / L_i per unit ratio excess is the coefficient itself
            (vec![1.0 + cfg.epsilon; n], table.values().to_vec())
        } else {
            let max_r = table.max();
            let scale = if max_r > 0.0 { 1.0 / max_r } else { 1.0 };
            (epsilon_of_sigma(table, cfg.epsilon)?, vec![scale; n])
        };
        if let Some(per_bin) = &cfg.bin_step_scale {
            table.grid().check_len(per_bin.len())?;
            for (b, s) in step_base.iter_mut().zip(per_bin) {
                *b *= s;
            }
        }
        Ok(Constraints {
            table,
            log_scale: cfg.log_scale,
            epsilon: cfg.epsilon,
            thresholds,
            step_base,
        })
    }

    fn weights(&self, p: &BinDistribution, lambda: &BinDistribution) -> Result<BinDistribution> {
        if self.log_scale {
            log_scale_weights(p, lambda, self.table)
        } else {
            let raw = p.weights().iter().zip(lambda.weights()).map(|(a, b)| a + b).collect();
            BinDistribution::multiplier(p.grid(), raw)
        }
    }

    fn gap(&self, risk: &RiskProfile) -> Result<GapProfile> {
        if self.log_scale {
            let ratio = risk
                .values()
                .iter()
                .zip(self.table.values())
                .map(|(r, l)| r / l - 1.0)
                .collect();
            Ok(GapProfile::from_parts(risk.grid(), ratio))
        } else {
            gap_profile(risk, self.table)
        }
    }

    /// Evaluation noise on the gap scale.
    fn gap_stderr(&self, risk: &RiskProfile) -> f64 {
        match risk.stderr() {
            None => 0.0,
            Some(se) if self.log_scale => se
                .iter()
                .zip(self.table.values())
                .map(|(s, l)| s / l)
                .fold(0.0, f64::max),
            Some(_) => risk.max_stderr(),
        }
    }

    fn dual(&self, p: &BinDistribution, lambda: &BinDistribution, risk: &RiskProfile) -> Result<f64> {
        let form = if self.log_scale {
            DualForm::P1Log {
                p,
                log_baseline: self.table,
                epsilon: self.epsilon,
            }
        } else {
            DualForm::P1 {
                p,
                thresholds: &self.thresholds,
            }
        };
        dual_value(lambda, risk, form)
    }
}

/// Dual ascent for P1, starting from `lambda = 0` (the unconstrained `f_p`).
///
/// `table` holds `r(sigma)` on the linear scale and `L_delta(sigma)` when
/// `cfg.log_scale` is set. The run stops once the multiplier moves less than
/// `stop_tol * (1 + max lambda)` and the max gap is within `epsilon` plus
/// `max(4 * stderr, stop_tol)`. Hitting `max_rounds` first returns a solution
/// with `converged == false`; that usually means `epsilon < epsilon_min`
/// (solve P2 first to find it) or a step size that is too large. With Monte
/// Carlo risks the multiplier keeps jittering, so such runs normally use the
/// whole round budget and should be judged by the final gaps and stderrs.
pub fn solve_p1<T: Trainer>(
    trainer: &mut T,
    p: &BinDistribution,
    table: &BaselineRiskTable,
    cfg: &SolverConfig,
) -> Result<P1Solution<T::Estimator>> {
    cfg.validate()?;
    p.require_normalized()?;
    p.grid().ensure_same(table.grid())?;
    let constraints = Constraints::new(table, cfg)?;

    let mut lambda = BinDistribution::zeros(p.grid());
    let mut history = Vec::new();
    let mut converged = false;
    let mut last_estimator = None;

    for round in 1..=cfg.max_rounds {
        let (train_seed, eval_seed) = round_seeds(cfg.seed, round);
        let weights = constraints.weights(p, &lambda)?;
        let (estimator, risk, pi) = train_and_evaluate(trainer, &weights, train_seed, eval_seed)?;
        let gap = constraints.gap(&risk)?;
        let dual = constraints.dual(p, &lambda, &risk)?;

        let coefficient = cfg.schedule.at(round);
        let alpha: Vec<f64> = constraints.step_base.iter().map(|b| coefficient * b).collect();
        let violation: Vec<f64> = gap.values().iter().map(|g| g - cfg.epsilon).collect();
        let next = ascent_step(&lambda, &violation, &alpha)?;

        let moved = next
            .weights()
            .iter()
            .zip(lambda.weights())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let slack = (4.0 * constraints.gap_stderr(&risk)).max(cfg.stop_tol);
        let feasible = gap.max() <= cfg.epsilon + slack;

        history.push(DualState {
            round,
            lambda: lambda.clone(),
            pi,
            risk,
            gap,
            dual_value: dual,
            step_size: alpha.iter().copied().fold(0.0, f64::max),
        });
        last_estimator = Some(estimator);

        if moved <= cfg.stop_tol * (1.0 + next.max_weight()) && feasible {
            converged = true;
            break;
        }
        lambda = next;
    }

    let last = history.last().expect("max_rounds >= 1");
    Ok(P1Solution {
        pi_star: last.pi.clone(),
        lambda_star: last.lambda.clone(),
        estimator: last_estimator.expect("max_rounds >= 1"),
        converged,
        history,
    })
}
