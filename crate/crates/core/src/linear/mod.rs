//! Scalar linear-Gaussian denoiser with closed-form training and risks.
//!
//! The clean signal is `y ~ N(0, sigma_y^2)`, the observation is
//! `x = y + sigma * eta` with `eta ~ N(0, 1)`, and the estimator is `f(x) = a x`.
//! Training under a noise distribution `pi` depends on `pi` only through the
//! effective variance `sum_i pi_i sigma_i^2`, which is what makes the
//! brute-force [`oracle`] cheap.

pub mod oracle;

use crate::error::{Error, Result};
use crate::model::{normalize, BaselineRiskTable, BinDistribution, NoiseGrid, RiskProfile, Trainer};

/// `E[log chi^2_1] = digamma(1/2) + ln 2 = -(euler_gamma + ln 2)`.
pub const MEAN_LOG_CHI_SQUARED_1: f64 = -(0.577_215_664_901_532_9 + std::f64::consts::LN_2);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearGaussianModel {
    sigma_y: f64,
}

impl LinearGaussianModel {
    pub fn new(sigma_y: f64) -> Result<Self> {
        if !(sigma_y > 0.0) || !sigma_y.is_finite() {
            return Err(Error::Domain(format!("sigma_y must be positive, got {sigma_y}")));
        }
        Ok(LinearGaussianModel { sigma_y })
    }

    pub fn sigma_y(&self) -> f64 {
        self.sigma_y
    }

    pub fn signal_variance(&self) -> f64 {
        self.sigma_y * self.sigma_y
    }

    /// Gain of the estimator trained against noise of effective variance `sigma_bar_sq`.
    pub fn gain_for_variance(&self, sigma_bar_sq: f64) -> f64 {
        let vy = self.signal_variance();
        vy / (vy + sigma_bar_sq)
    }
}

/// `f(x) = gain * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearEstimator {
    pub gain: f64,
}

impl LinearEstimator {
    pub fn new(gain: f64) -> Self {
        LinearEstimator { gain }
    }

    pub fn apply(&self, x: f64) -> f64 {
        self.gain * x
    }
}

/// `sum_i pi_i sigma_i^2` over bin representatives.
pub fn effective_variance(pi: &BinDistribution) -> Result<f64> {
    pi.require_normalized()?;
    let squares: Vec<f64> = pi.grid().representatives().iter().map(|s| s * s).collect();
    pi.weighted_sum(&squares)
}

/// `a = sigma_y^2 / (sigma_y^2 + sigma_bar^2)`, the exact minimizer of the
/// pi-weighted squared error.
pub fn train_closed_form(model: &LinearGaussianModel, pi: &BinDistribution) -> Result<LinearEstimator> {
    Ok(LinearEstimator::new(model.gain_for_variance(effective_variance(pi)?)))
}

/// `E[(a x - y)^2 | sigma] = (a - 1)^2 sigma_y^2 + a^2 sigma^2`.
///
/// This is the direct expansion `a^2 (sigma_y^2 + sigma^2) - 2 a sigma_y^2 + sigma_y^2`
/// regrouped so that it cannot cancel below zero.
pub fn conditional_risk_closed_form(model: &LinearGaussianModel, est: &LinearEstimator, sigma: f64) -> f64 {
    let a = est.gain;
    let vy = model.signal_variance();
    (a - 1.0) * (a - 1.0) * vy + a * a * sigma * sigma
}

/// Risk of the estimator trained only at `sigma`: `sigma_y^2 sigma^2 / (sigma_y^2 + sigma^2)`.
pub fn best_individual_risk(model: &LinearGaussianModel, sigma: f64) -> f64 {
    let vy = model.signal_variance();
    let v = sigma * sigma;
    vy * v / (vy + v)
}

/// Gain of the best individual estimator at `sigma`.
pub fn best_individual_gain(model: &LinearGaussianModel, sigma: f64) -> f64 {
    model.gain_for_variance(sigma * sigma)
}

pub fn risk_profile(model: &LinearGaussianModel, est: &LinearEstimator, grid: &NoiseGrid) -> Result<RiskProfile> {
    let values = grid
        .representatives()
        .iter()
        .map(|&s| conditional_risk_closed_form(model, est, s))
        .collect();
    RiskProfile::new(grid, values)
}

/// `r(sigma_i)` at every bin.
pub fn baseline_table(model: &LinearGaussianModel, grid: &NoiseGrid) -> Result<BaselineRiskTable> {
    let values = grid
        .representatives()
        .iter()
        .map(|&s| best_individual_risk(model, s))
        .collect();
    BaselineRiskTable::new(grid, values)
}

/// Exact log-scale normalizer `L_delta(sigma) = exp(E[log loss])` of the best
/// individual estimator.
///
/// The error `a* x - y` of the best individual is zero-mean Gaussian with
/// variance `r(sigma)`, so the squared loss is `r(sigma) * chi^2_1` and
/// `L_delta = r(sigma) * exp(E[log chi^2_1])`.
pub fn log_baseline_closed_form(model: &LinearGaussianModel, grid: &NoiseGrid) -> Result<BaselineRiskTable> {
    let scale = MEAN_LOG_CHI_SQUARED_1.exp();
    let mut values = Vec::with_capacity(grid.bin_count());
    for &s in grid.representatives() {
        let r = best_individual_risk(model, s);
        if !(r > 0.0) {
            return Err(Error::Domain(format!(
                "log-scale normalizer is zero at sigma = {s}; log-scale constraints need sigma > 0"
            )));
        }
        values.push(r * scale);
    }
    BaselineRiskTable::new(grid, values)
}

/// Trainer backed by the closed forms: exact training, exact risks.
#[derive(Debug, Clone)]
pub struct AnalyticLinearTrainer {
    model: LinearGaussianModel,
}

impl AnalyticLinearTrainer {
    pub fn new(model: LinearGaussianModel) -> Self {
        AnalyticLinearTrainer { model }
    }

    pub fn model(&self) -> &LinearGaussianModel {
        &self.model
    }
}

impl Trainer for AnalyticLinearTrainer {
    type Estimator = LinearEstimator;

    fn train(&mut self, weights: &BinDistribution, _seed: u64) -> Result<LinearEstimator> {
        train_closed_form(&self.model, &normalize(weights)?)
    }

    fn evaluate(&self, estimator: &LinearEstimator, grid: &NoiseGrid, _seed: u64) -> Result<RiskProfile> {
        risk_profile(&self.model, estimator, grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_grid;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn model() -> LinearGaussianModel {
        LinearGaussianModel::new(10.0).unwrap()
    }

    // Independent of the closed form: sample mean and standard error of the
    // squared error of `a x - y`.
    fn monte_carlo_risk(a: f64, sigma: f64, n: usize, seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..n {
            let y: f64 = 10.0 * rng.sample::<f64, _>(StandardNormal);
            let eta: f64 = rng.sample(StandardNormal);
            let loss = (a * (y + sigma * eta) - y).powi(2);
            sum += loss;
            sum_sq += loss * loss;
        }
        let mean = sum / n as f64;
        let var = (sum_sq - n as f64 * mean * mean) / (n as f64 - 1.0);
        (mean, (var / n as f64).sqrt())
    }

    #[test]
    fn effective_variance_examples() {
        let g = make_grid(0.0, 20.0, 2).unwrap();
        assert_eq!(
            effective_variance(&BinDistribution::uniform(&g)).unwrap(),
            125.0
        );
        let g1 = make_grid(5.0, 15.0, 1).unwrap();
        assert_eq!(
            effective_variance(&BinDistribution::point_mass(&g1, 0).unwrap()).unwrap(),
            100.0
        );
        // oracle: direct summation of the squared midpoints 5, 15, ..., 95
        let g10 = make_grid(0.0, 100.0, 10).unwrap();
        let oracle: f64 = (0..10).map(|i| (5.0 + 10.0 * i as f64).powi(2)).sum::<f64>() / 10.0;
        assert_eq!(oracle, 3325.0);
        let ev = effective_variance(&BinDistribution::uniform(&g10)).unwrap();
        assert!((ev - 3325.0).abs() < 1e-9);
    }

    #[test]
    fn effective_variance_rejects_multipliers() {
        let g = make_grid(0.0, 20.0, 2).unwrap();
        let lambda = BinDistribution::multiplier(&g, vec![1.0, 1.0]).unwrap();
        assert!(matches!(effective_variance(&lambda), Err(Error::Unnormalized { .. })));
    }

    #[test]
    fn closed_form_training_examples() {
        let m = model();
        let g = make_grid(5.0, 15.0, 1).unwrap();
        let at_ten = train_closed_form(&m, &BinDistribution::point_mass(&g, 0).unwrap()).unwrap();
        assert_eq!(at_ten.gain, 0.5);

        let g0 = make_grid(0.0, 0.5, 2).unwrap();
        let pm = BinDistribution::multiplier(&g0, vec![1.0, 0.0]).unwrap();
        let near_zero = train_closed_form(&m, &normalize(&pm).unwrap()).unwrap();
        assert!((near_zero.gain - 100.0 / (100.0 + 0.125 * 0.125)).abs() < 1e-15);
        assert_eq!(m.gain_for_variance(0.0), 1.0);

        let g10 = make_grid(0.0, 100.0, 10).unwrap();
        let uni = train_closed_form(&m, &BinDistribution::uniform(&g10)).unwrap();
        assert!((uni.gain - 100.0 / 3425.0).abs() < 1e-12);
    }

    #[test]
    fn conditional_risk_examples() {
        let m = model();
        assert_eq!(conditional_risk_closed_form(&m, &LinearEstimator::new(1.0), 0.0), 0.0);
        assert_eq!(conditional_risk_closed_form(&m, &LinearEstimator::new(0.5), 10.0), 50.0);
        for sigma in [0.0, 3.0, 50.0] {
            assert_eq!(conditional_risk_closed_form(&m, &LinearEstimator::new(0.0), sigma), 100.0);
        }
    }

    #[test]
    fn conditional_risk_matches_monte_carlo() {
        let (mean, se) = monte_carlo_risk(0.5, 10.0, 1_000_000, 11);
        assert!((mean - 50.0).abs() <= 0.5, "mc mean {mean}");
        assert!((mean - 50.0).abs() <= 4.0 * se);
        let m = model();
        for (a, sigma, seed) in [(0.3, 2.0, 1u64), (0.9, 15.0, 2), (0.72, 9.875, 3)] {
            let (mean, se) = monte_carlo_risk(a, sigma, 1_000_000, seed);
            let exact = conditional_risk_closed_form(&m, &LinearEstimator::new(a), sigma);
            assert!((mean - exact).abs() <= 4.0 * se, "a={a} sigma={sigma}: {mean} vs {exact}");
        }
    }

    #[test]
    fn expansion_matches_printed_structure_with_sigma_y_squared() {
        // the substituted form with leading factor sigma_y^2
        let m = model();
        let vy = m.signal_variance();
        for (sbar, sigma) in [(25.0, 3.0), (100.0, 10.0), (400.0, 0.5)] {
            let a = m.gain_for_variance(sbar);
            let d = vy + sbar;
            let printed = vy * (vy * (vy + sigma * sigma) - 2.0 * vy * d + d * d) / (d * d);
            let ours = conditional_risk_closed_form(&m, &LinearEstimator::new(a), sigma);
            assert!((printed - ours).abs() < 1e-9 * ours.max(1.0));
        }
    }

    #[test]
    fn best_individual_examples() {
        let m = model();
        assert_eq!(best_individual_risk(&m, 0.0), 0.0);
        assert_eq!(best_individual_risk(&m, 10.0), 50.0);
        let far = best_individual_risk(&m, 1e4);
        assert!(far < 100.0 && far > 99.0);
        // matched minimizer at sigma = 10 is a = 0.5, so the MC oracle applies
        assert_eq!(best_individual_gain(&m, 10.0), 0.5);
    }

    #[test]
    fn lower_envelope_over_gain_sweep() {
        let m = model();
        let g = make_grid(0.0, 20.0, 40).unwrap();
        for &s in g.representatives() {
            let r = best_individual_risk(&m, s);
            for k in 0..=100 {
                let a = k as f64 / 100.0;
                assert!(r <= conditional_risk_closed_form(&m, &LinearEstimator::new(a), s) + 1e-12);
            }
        }
    }

    #[test]
    fn touch_point_when_effective_variance_equals_sigma_squared() {
        let m = model();
        for sigma in [0.5, 4.0, 9.0, 17.3] {
            let a = m.gain_for_variance(sigma * sigma);
            let risk = conditional_risk_closed_form(&m, &LinearEstimator::new(a), sigma);
            assert!((risk - best_individual_risk(&m, sigma)).abs() < 1e-12 * risk.max(1.0));
        }
    }

    #[test]
    fn log_baseline_requires_positive_sigma() {
        let m = model();
        let g = make_grid(0.0, 10.0, 4).unwrap();
        let table = log_baseline_closed_form(&m, &g).unwrap();
        let r = baseline_table(&m, &g).unwrap();
        for (l, r) in table.values().iter().zip(r.values()) {
            assert!((l / r - 0.280_728_9).abs() < 1e-6);
        }
        // a grid whose single bin sits at sigma = 0 cannot exist, but a model
        // evaluated at sigma = 0 has a zero normalizer
        assert_eq!(best_individual_risk(&m, 0.0), 0.0);
    }

    #[test]
    fn analytic_trainer_normalizes_weights() {
        let m = model();
        let g = make_grid(0.0, 20.0, 4).unwrap();
        let mut t = AnalyticLinearTrainer::new(m);
        let raw = BinDistribution::multiplier(&g, vec![2.0, 2.0, 2.0, 2.0]).unwrap();
        let a = t.train(&raw, 0).unwrap();
        let b = t.train(&BinDistribution::uniform(&g), 0).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn average_risk_is_lowest_when_trained_on_p(raw_pi in prop::collection::vec(0.0f64..1.0, 8)) {
            prop_assume!(raw_pi.iter().any(|w| *w > 0.0));
            let m = model();
            let g = make_grid(0.0, 20.0, 8).unwrap();
            let p = BinDistribution::uniform(&g);
            let pi = BinDistribution::from_raw(&g, raw_pi).unwrap();
            let fp = train_closed_form(&m, &p).unwrap();
            let fpi = train_closed_form(&m, &pi).unwrap();
            let rp = risk_profile(&m, &fp, &g).unwrap().overall(&p).unwrap();
            let rpi = risk_profile(&m, &fpi, &g).unwrap().overall(&p).unwrap();
            prop_assert!(rp <= rpi + 1e-9);
        }

        #[test]
        fn conditional_risk_midpoint_convex(a1 in -2.0f64..3.0, a2 in -2.0f64..3.0, sigma in 0.0f64..100.0) {
            let m = model();
            let r = |a: f64| conditional_risk_closed_form(&m, &LinearEstimator::new(a), sigma);
            prop_assert!(r(0.5 * (a1 + a2)) <= 0.5 * (r(a1) + r(a2)) + 1e-9);
        }

        #[test]
        fn trained_gain_in_unit_interval(raw_pi in prop::collection::vec(0.0f64..1.0, 5)) {
            prop_assume!(raw_pi.iter().any(|w| *w > 0.0));
            let g = make_grid(0.0, 100.0, 5).unwrap();
            let a = train_closed_form(&model(), &BinDistribution::from_raw(&g, raw_pi).unwrap()).unwrap();
            prop_assert!((0.0..=1.0).contains(&a.gain));
        }
    }
}
