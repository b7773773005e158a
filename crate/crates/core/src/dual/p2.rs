use super::{
    dual_value, project_to_simplex, round_seeds, train_and_evaluate, DualForm, DualState, SimplexUpdate,
    SolverConfig,
};
use crate::error::{Error, Result};
use crate::model::{gap_profile, BaselineRiskTable, BinDistribution, GapProfile, RiskProfile, Trainer};

/// Multiplier mass below this is treated as outside the support.
const SUPPORT_FLOOR: f64 = 1e-6;

/// Trains with sampling weights `lambda` (already on the simplex).
pub fn p2_f_step<T: Trainer>(
    trainer: &mut T,
    lambda: &BinDistribution,
    seed: u64,
) -> Result<(T::Estimator, RiskProfile)> {
    lambda.require_normalized()?;
    let (est, risk, _) = train_and_evaluate(trainer, lambda, seed, seed)?;
    Ok((est, risk))
}

/// Gradient step `lambda + alpha * gap` followed by `rule` to return to the simplex.
pub fn p2_lambda_step(
    lambda: &BinDistribution,
    gap: &GapProfile,
    alpha: f64,
    rule: SimplexUpdate,
) -> Result<BinDistribution> {
    lambda.grid().ensure_same(gap.grid())?;
    let stepped: Vec<f64> = lambda
        .weights()
        .iter()
        .zip(gap.values())
        .map(|(l, g)| l + alpha * g)
        .collect();
    let next = match rule {
        SimplexUpdate::Project => project_to_simplex(&stepped),
        SimplexUpdate::Renormalize => {
            let clipped: Vec<f64> = stepped.iter().map(|v| v.max(0.0)).collect();
            let sum: f64 = clipped.iter().sum();
            if !(sum > 0.0) {
                return Err(Error::DegenerateDistribution);
            }
            clipped.iter().map(|v| v / sum).collect()
        }
    };
    BinDistribution::from_raw(lambda.grid(), next)
}

#[derive(Debug, Clone)]
pub struct P2Solution<E> {
    /// Final multiplier, which is also the training distribution.
    pub pi_star: BinDistribution,
    pub estimator: E,
    /// Largest gap of the final round.
    pub epsilon_min: f64,
    /// Smallest max gap seen over all rounds.
    pub epsilon_min_best: f64,
    /// `max - min` of the final gap over every bin.
    pub gap_spread: f64,
    /// `max - min` of the final gap over bins where the multiplier is positive.
    pub support_gap_spread: f64,
    pub history: Vec<DualState>,
    pub converged: bool,
}

impl<E> P2Solution<E> {
    pub fn final_state(&self) -> &DualState {
        self.history.last().expect("at least one round")
    }

    pub fn rounds(&self) -> usize {
        self.history.len()
    }
}

/// Dual ascent for P2 from the uniform multiplier.
///
/// `table` is `r(sigma)` (or `L_delta(sigma)` with `cfg.log_scale`). The
/// epsilon field of `cfg` is ignored. Stops when the multiplier moves less
/// than `stop_tol * (1 + max lambda)`.
pub fn solve_p2<T: Trainer>(
    trainer: &mut T,
    table: &BaselineRiskTable,
    cfg: &SolverConfig,
) -> Result<P2Solution<T::Estimator>> {
    let cfg_checked = SolverConfig {
        epsilon: f64::INFINITY,
        ..cfg.clone()
    };
    cfg_checked.validate()?;
    let grid = table.grid();
    let n = grid.bin_count();
    let base_step = if cfg.log_scale {
        vec![1.0; n]
    } else {
        let max_r = table.max();
        vec![if max_r > 0.0 { 1.0 / max_r } else { 1.0 }; n]
    };
    let step_base: Vec<f64> = match &cfg.bin_step_scale {
        Some(s) => {
            grid.check_len(s.len())?;
            base_step.iter().zip(s).map(|(a, b)| a * b).collect()
        }
        None => base_step,
    };
    let uniform_step = step_base.iter().all(|s| *s == step_base[0]);

    let mut lambda = BinDistribution::uniform(grid);
    let mut history = Vec::new();
    let mut converged = false;
    let mut last_estimator = None;

    for round in 1..=cfg.max_rounds {
        let (train_seed, eval_seed) = round_seeds(cfg.seed, round);
        let (estimator, risk, pi) = train_and_evaluate(trainer, &lambda, train_seed, eval_seed)?;
        let gap = if cfg.log_scale {
            let ratio = risk
                .values()
                .iter()
                .zip(table.values())
                .map(|(r, l)| r / l - 1.0)
                .collect();
            GapProfile::from_parts(grid, ratio)
        } else {
            gap_profile(&risk, table)?
        };
        let dual = if cfg.log_scale {
            gap.values().iter().zip(pi.weights()).map(|(g, l)| g * l).sum()
        } else {
            dual_value(&pi, &risk, DualForm::P2 { baseline: table })?
        };

        let coefficient = cfg.schedule.at(round);
        let next = if uniform_step {
            p2_lambda_step(&pi, &gap, coefficient * step_base[0], cfg.simplex_update)?
        } else {
            let scaled: Vec<f64> = gap.values().iter().zip(&step_base).map(|(g, s)| g * s).collect();
            p2_lambda_step(&pi, &GapProfile::from_parts(grid, scaled), coefficient, cfg.simplex_update)?
        };
        let moved = next
            .weights()
            .iter()
            .zip(pi.weights())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);

        history.push(DualState {
            round,
            lambda: pi.clone(),
            pi,
            risk,
            gap,
            dual_value: dual,
            step_size: coefficient * step_base.iter().copied().fold(0.0, f64::max),
        });
        last_estimator = Some(estimator);

        if moved <= cfg.stop_tol * (1.0 + next.max_weight()) {
            converged = true;
            break;
        }
        lambda = next;
    }

    let last = history.last().expect("max_rounds >= 1");
    let epsilon_min_best = history.iter().map(|s| s.gap.max()).fold(f64::INFINITY, f64::min);
    let support: Vec<f64> = last
        .gap
        .values()
        .iter()
        .zip(last.pi.weights())
        .filter(|(_, l)| **l > SUPPORT_FLOOR)
        .map(|(g, _)| *g)
        .collect();
    let support_gap_spread = support.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - support.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(P2Solution {
        pi_star: last.pi.clone(),
        estimator: last_estimator.expect("max_rounds >= 1"),
        epsilon_min: last.gap.max(),
        epsilon_min_best,
        gap_spread: last.gap.spread(),
        support_gap_spread,
        converged,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::StepSchedule;
    use crate::linear::{baseline_table, oracle::oracle_min_max_linear, AnalyticLinearTrainer, LinearGaussianModel};
    use crate::model::make_grid;

    fn model() -> LinearGaussianModel {
        LinearGaussianModel::new(10.0).unwrap()
    }

    #[test]
    fn renormalize_step_example() {
        let g = make_grid(0.0, 20.0, 2).unwrap();
        let lambda = BinDistribution::uniform(&g);
        let gap = GapProfile::from_parts(&g, vec![2.0, 0.0]);
        let next = p2_lambda_step(&lambda, &gap, 0.25, SimplexUpdate::Renormalize).unwrap();
        assert!((next.weights()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((next.weights()[1] - 1.0 / 3.0).abs() < 1e-15);
        let projected = p2_lambda_step(&lambda, &gap, 0.25, SimplexUpdate::Project).unwrap();
        assert_eq!(projected.weights(), &[0.75, 0.25]);
    }

    #[test]
    fn equal_gaps_are_a_fixed_point() {
        let g = make_grid(0.0, 20.0, 5).unwrap();
        let lambda = BinDistribution::normalized(&g, vec![0.1, 0.2, 0.3, 0.25, 0.15]).unwrap();
        let gap = GapProfile::from_parts(&g, vec![3.0; 5]);
        let next = p2_lambda_step(&lambda, &gap, 0.4, SimplexUpdate::Project).unwrap();
        for (a, b) in next.weights().iter().zip(lambda.weights()) {
            assert!((a - b).abs() < 1e-12);
        }
        // renormalizing instead pulls every weight toward uniform
        let pulled = p2_lambda_step(&lambda, &gap, 0.4, SimplexUpdate::Renormalize).unwrap();
        for (a, b) in pulled.weights().iter().zip(lambda.weights()) {
            assert!((a - 0.2).abs() < (b - 0.2).abs() || *b == 0.2);
        }
    }

    #[test]
    fn single_bin_stops_immediately() {
        let g = make_grid(5.0, 15.0, 1).unwrap();
        let base = baseline_table(&model(), &g).unwrap();
        let mut trainer = AnalyticLinearTrainer::new(model());
        let sol = solve_p2(&mut trainer, &base, &SolverConfig::default()).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.rounds(), 1);
        assert!(sol.epsilon_min.abs() < 1e-9);
    }

    #[test]
    fn projected_run_reaches_min_max() {
        let g = make_grid(0.0, 10.0, 40).unwrap();
        let base = baseline_table(&model(), &g).unwrap();
        let mut trainer = AnalyticLinearTrainer::new(model());
        let cfg = SolverConfig {
            max_rounds: 5000,
            ..SolverConfig::default()
        };
        let sol = solve_p2(&mut trainer, &base, &cfg).unwrap();
        let oracle = oracle_min_max_linear(&model(), &BinDistribution::uniform(&g)).unwrap();
        assert!(sol.converged);
        assert!((sol.epsilon_min - oracle.epsilon_min).abs() <= 0.01 * oracle.epsilon_min);
        // support sits on the two ends, where the gaps are equal
        assert!(sol.support_gap_spread <= 0.05 * sol.epsilon_min);
    }

    #[test]
    fn renormalized_run_stalls_above_min_max() {
        let g = make_grid(0.0, 10.0, 40).unwrap();
        let base = baseline_table(&model(), &g).unwrap();
        let mut trainer = AnalyticLinearTrainer::new(model());
        let cfg = SolverConfig {
            max_rounds: 3000,
            simplex_update: SimplexUpdate::Renormalize,
            ..SolverConfig::default()
        };
        let sol = solve_p2(&mut trainer, &base, &cfg).unwrap();
        let oracle = oracle_min_max_linear(&model(), &BinDistribution::uniform(&g)).unwrap();
        assert!(sol.epsilon_min > 1.1 * oracle.epsilon_min);
    }

    #[test]
    fn dual_never_exceeds_primal() {
        let g = make_grid(0.0, 20.0, 10).unwrap();
        let base = baseline_table(&model(), &g).unwrap();
        let mut trainer = AnalyticLinearTrainer::new(model());
        let cfg = SolverConfig {
            max_rounds: 50,
            schedule: StepSchedule::Diminishing(0.5),
            ..SolverConfig::default()
        };
        let sol = solve_p2(&mut trainer, &base, &cfg).unwrap();
        for s in &sol.history {
            assert!(s.dual_value <= s.gap.max() + 1e-9);
        }
    }
}
