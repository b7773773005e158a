use super::{derive_seed, draw_pair, mc_risk_profile, rng, BinSampler};
use crate::error::{Error, Result};
use crate::linear::{LinearEstimator, LinearGaussianModel};
use crate::model::{normalize, BinDistribution, NoiseGrid, RiskProfile, Trainer};

/// |a| beyond this is treated as divergence.
const DIVERGENCE_BOUND: f64 = 1e3;

#[derive(Debug, Clone, PartialEq)]
pub struct SgdConfig {
    pub epochs_per_round: usize,
    /// Mini-batches per epoch; samples are generated online, so an epoch is a
    /// fixed number of fresh batches.
    pub batches_per_epoch: usize,
    pub batch_size: usize,
    pub step_size: f64,
    /// Scale the step by `1/sqrt(1 + epoch)` within a call.
    pub diminishing: bool,
    pub seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            epochs_per_round: 10,
            batches_per_epoch: 50,
            batch_size: 1024,
            step_size: 1e-3,
            diminishing: true,
            seed: 0,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs_per_round == 0 || self.batches_per_epoch == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "sgd epochs_per_round, batches_per_epoch and batch_size must be positive".into(),
            ));
        }
        if !(self.step_size >= 0.0) || !self.step_size.is_finite() {
            return Err(Error::Config(format!(
                "sgd step_size must be finite and nonnegative, got {}",
                self.step_size
            )));
        }
        Ok(())
    }
}

/// Mini-batch gradient descent on the mean squared error `(a x - y)^2`,
/// warm-started from `warm_start`, with noise levels drawn from `pi`.
pub fn sgd_train_linear(
    model: &LinearGaussianModel,
    pi: &BinDistribution,
    cfg: &SgdConfig,
    warm_start: LinearEstimator,
) -> Result<LinearEstimator> {
    pi.require_normalized()?;
    cfg.validate()?;
    let sampler = BinSampler::new(pi);
    let mut a = warm_start.gain;
    let mut steps = 0;
    for epoch in 0..cfg.epochs_per_round {
        let eta = if cfg.diminishing {
            cfg.step_size / ((1 + epoch) as f64).sqrt()
        } else {
            cfg.step_size
        };
        let mut rng = rng(derive_seed(cfg.seed, epoch as u64, u64::MAX));
        for _ in 0..cfg.batches_per_epoch {
            let mut grad = 0.0;
            for _ in 0..cfg.batch_size {
                let sigma = sampler.draw(&mut rng);
                let pair = draw_pair(model, sigma, &mut rng);
                grad += pair.x * (a * pair.x - pair.y);
            }
            a -= eta * 2.0 * grad / cfg.batch_size as f64;
            steps += 1;
            if !a.is_finite() || a.abs() > DIVERGENCE_BOUND {
                return Err(Error::Diverged { gain: a, steps });
            }
        }
    }
    Ok(LinearEstimator::new(a))
}

/// Trainer that fits the linear estimator by warm-started SGD and scores it by
/// Monte Carlo on fresh samples.
#[derive(Debug, Clone)]
pub struct SgdLinearTrainer {
    model: LinearGaussianModel,
    cfg: SgdConfig,
    mc_samples: usize,
    current: LinearEstimator,
}

impl SgdLinearTrainer {
    pub fn new(model: LinearGaussianModel, cfg: SgdConfig, mc_samples: usize, init: LinearEstimator) -> Result<Self> {
        cfg.validate()?;
        if mc_samples < 2 {
            return Err(Error::Config("mc samples per bin must be at least 2".into()));
        }
        Ok(SgdLinearTrainer {
            model,
            cfg,
            mc_samples,
            current: init,
        })
    }

    pub fn current(&self) -> LinearEstimator {
        self.current
    }
}

impl Trainer for SgdLinearTrainer {
    type Estimator = LinearEstimator;

    fn train(&mut self, weights: &BinDistribution, seed: u64) -> Result<LinearEstimator> {
        let pi = normalize(weights)?;
        let cfg = SgdConfig {
            seed,
            ..self.cfg.clone()
        };
        self.current = sgd_train_linear(&self.model, &pi, &cfg, self.current)?;
        Ok(self.current)
    }

    fn evaluate(&self, estimator: &LinearEstimator, grid: &NoiseGrid, seed: u64) -> Result<RiskProfile> {
        mc_risk_profile(estimator, &self.model, grid, self.mc_samples, seed)
    }
}
