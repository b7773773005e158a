//! Brute-force solutions of the constrained and min-max problems for the
//! linear backend, by grid search over the effective noise variance.

use super::{baseline_table, risk_profile, LinearEstimator, LinearGaussianModel};
use crate::error::{Error, Result};
use crate::model::{gap_profile, BinDistribution, GapProfile, NoiseGrid, RiskProfile};

/// Coarse candidates per search: resolution `1e-3 * sigma_max^2`.
const COARSE_STEPS: usize = 1000;
/// Refinement is one decade finer, spanning one coarse step on either side.
const REFINE_STEPS: usize = 20;

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub sigma_bar_sq: f64,
    pub estimator: LinearEstimator,
    pub risk: RiskProfile,
    pub gap: GapProfile,
    /// Overall risk under the testing distribution the oracle was given.
    pub overall_risk: f64,
    pub max_gap: f64,
    /// Smallest achievable max gap on this grid (found as a byproduct).
    pub epsilon_min: f64,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    sigma_bar_sq: f64,
    overall: f64,
    max_gap: f64,
}

struct Search<'a> {
    model: &'a LinearGaussianModel,
    p: &'a BinDistribution,
    baseline: Vec<f64>,
    sq: Vec<f64>,
    step: f64,
}

impl<'a> Search<'a> {
    fn new(model: &'a LinearGaussianModel, p: &'a BinDistribution) -> Result<Self> {
        p.require_normalized()?;
        let grid = p.grid();
        let baseline = baseline_table(model, grid)?.values().to_vec();
        let sq = grid.representatives().iter().map(|s| s * s).collect();
        let smax = grid.sigma_max();
        Ok(Search {
            model,
            p,
            baseline,
            sq,
            step: smax * smax / COARSE_STEPS as f64,
        })
    }

    fn candidate(&self, sigma_bar_sq: f64) -> Candidate {
        let a = self.model.gain_for_variance(sigma_bar_sq);
        let vy = self.model.signal_variance();
        let mut overall = 0.0;
        let mut max_gap = f64::NEG_INFINITY;
        for ((&v, &r), &w) in self.sq.iter().zip(&self.baseline).zip(self.p.weights()) {
            let risk = (a - 1.0) * (a - 1.0) * vy + a * a * v;
            overall += w * risk;
            max_gap = max_gap.max(risk - r);
        }
        Candidate {
            sigma_bar_sq,
            overall,
            max_gap,
        }
    }

    fn coarse(&self) -> Vec<Candidate> {
        (0..=COARSE_STEPS)
            .map(|k| self.candidate(k as f64 * self.step))
            .collect()
    }

    fn refined(&self, center: f64) -> Vec<Candidate> {
        let fine = self.step / (REFINE_STEPS / 2) as f64;
        let upper = self.step * COARSE_STEPS as f64;
        (0..=REFINE_STEPS)
            .map(|k| center - self.step + k as f64 * fine)
            .filter(|s| *s >= 0.0 && *s <= upper)
            .map(|s| self.candidate(s))
            .collect()
    }

    fn solution(&self, best: Candidate, epsilon_min: f64) -> Result<OracleSolution> {
        let grid: &NoiseGrid = self.p.grid();
        let estimator = LinearEstimator::new(self.model.gain_for_variance(best.sigma_bar_sq));
        let risk = risk_profile(self.model, &estimator, grid)?;
        let gap = gap_profile(&risk, &baseline_table(self.model, grid)?)?;
        Ok(OracleSolution {
            sigma_bar_sq: best.sigma_bar_sq,
            estimator,
            overall_risk: best.overall,
            max_gap: best.max_gap,
            risk,
            gap,
            epsilon_min,
        })
    }
}

// Deterministic reduction: smallest key, ties to the smaller variance.
fn pick_min<F>(cands: impl IntoIterator<Item = Candidate>, key: F) -> Option<Candidate>
where
    F: Fn(&Candidate) -> f64,
{
    cands.into_iter().fold(None, |best: Option<Candidate>, c| match best {
        None => Some(c),
        Some(b) => {
            let (kc, kb) = (key(&c), key(&b));
            if kc < kb || (kc == kb && c.sigma_bar_sq < b.sigma_bar_sq) {
                Some(c)
            } else {
                Some(b)
            }
        }
    })
}

fn min_max(search: &Search<'_>) -> Candidate {
    let coarse = pick_min(search.coarse(), |c| c.max_gap).expect("non-empty search");
    pick_min(
        search.refined(coarse.sigma_bar_sq).into_iter().chain([coarse]),
        |c| c.max_gap,
    )
    .expect("non-empty search")
}

/// Minimizes `sum_i p_i R(a|sigma_i)` subject to `max_i gap_i <= epsilon` over
/// the gain family `a(sigma_bar^2)`.
pub fn oracle_solve_p1_linear(
    model: &LinearGaussianModel,
    p: &BinDistribution,
    epsilon: f64,
) -> Result<OracleSolution> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::Domain(format!("epsilon must be >= 0, got {epsilon}")));
    }
    let search = Search::new(model, p)?;
    let epsilon_min = min_max(&search).max_gap;

    let feasible = |c: &Candidate| c.max_gap <= epsilon;
    let coarse = pick_min(search.coarse().into_iter().filter(feasible), |c| c.overall);
    let Some(coarse) = coarse else {
        return Err(Error::Infeasible {
            epsilon,
            epsilon_min,
        });
    };
    let best = pick_min(
        search
            .refined(coarse.sigma_bar_sq)
            .into_iter()
            .filter(feasible)
            .chain([coarse]),
        |c| c.overall,
    )
    .expect("coarse incumbent is feasible");
    search.solution(best, epsilon_min)
}

/// Minimizes the maximum gap over the gain family. `p` only feeds the
/// reported overall risk.
pub fn oracle_min_max_linear(model: &LinearGaussianModel, p: &BinDistribution) -> Result<OracleSolution> {
    let search = Search::new(model, p)?;
    let best = min_max(&search);
    search.solution(best, best.max_gap)
}
