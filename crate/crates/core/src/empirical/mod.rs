//! Sampled-data pathway: noise-level sampling, synthetic pairs, Monte Carlo
//! conditional risks and an inexact SGD trainer.
//!
//! Every random draw goes through a ChaCha8 stream seeded explicitly, so the
//! same inputs and seed always reproduce the same numbers. Per-bin work that
//! runs in parallel derives its own stream with [`derive_seed`], which makes
//! the parallel result identical to a sequential one.

mod sgd;

pub use sgd::{sgd_train_linear, SgdConfig, SgdLinearTrainer};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linear::{best_individual_gain, LinearEstimator, LinearGaussianModel};
use crate::model::{BaselineRiskTable, BinDistribution, NoiseGrid, RiskProfile};

/// Zero losses are floored here before taking logs (squared-error units).
pub const LOG_LOSS_FLOOR: f64 = 1e-12;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `seed ^ hash(round, stream)`: an independent stream per (round, bin).
pub fn derive_seed(seed: u64, round: u64, stream: u64) -> u64 {
    seed ^ splitmix64(splitmix64(round) ^ stream.rotate_left(32))
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws `n` representatives i.i.d. from `pi` by inverse CDF over the bin weights.
pub fn sample_noise_levels(pi: &BinDistribution, n: usize, seed: u64) -> Result<Vec<f64>> {
    pi.require_normalized()?;
    if n == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    let sampler = BinSampler::new(pi);
    let mut rng = rng(seed);
    Ok((0..n).map(|_| sampler.draw(&mut rng)).collect())
}

/// Inverse-CDF sampler over bin representatives.
pub(crate) struct BinSampler {
    cumulative: Vec<f64>,
    levels: Vec<f64>,
}

impl BinSampler {
    pub(crate) fn new(pi: &BinDistribution) -> Self {
        let mut acc = 0.0;
        let cumulative = pi
            .weights()
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        BinSampler {
            cumulative,
            levels: pi.grid().representatives().to_vec(),
        }
    }

    pub(crate) fn draw(&self, rng: &mut impl Rng) -> f64 {
        let total = *self.cumulative.last().expect("non-empty grid");
        let u = rng.random::<f64>() * total;
        let idx = self.cumulative.partition_point(|c| *c <= u);
        // zero-weight trailing bins share the last cumulative value; never pick them
        let idx = idx.min(self.levels.len() - 1);
        let idx = (0..=idx)
            .rev()
            .find(|&i| i == 0 || self.cumulative[i] > self.cumulative[i - 1])
            .unwrap_or(idx);
        self.levels[idx]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePair {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub pairs: Vec<SamplePair>,
    pub seed: u64,
}

#[inline]
pub(crate) fn draw_pair(model: &LinearGaussianModel, sigma: f64, rng: &mut impl Rng) -> SamplePair {
    let y = model.sigma_y() * rng.sample::<f64, _>(StandardNormal);
    let eta: f64 = rng.sample(StandardNormal);
    SamplePair {
        x: y + sigma * eta,
        y,
        sigma,
    }
}

/// One `(x, y, sigma)` triple per requested noise level.
pub fn generate_pairs(model: &LinearGaussianModel, sigmas: &[f64], seed: u64) -> Result<SampleBatch> {
    if sigmas.is_empty() {
        return Err(Error::Domain("need at least one noise level".into()));
    }
    let mut rng = rng(seed);
    let pairs = sigmas.iter().map(|&s| draw_pair(model, s, &mut rng)).collect();
    Ok(SampleBatch { pairs, seed })
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    fn finish(&self) -> McEstimate {
        let var = if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        };
        McEstimate {
            estimate: self.mean,
            stderr: (var / self.n as f64).sqrt(),
        }
    }
}

fn check_count(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Domain(format!("need at least 2 samples, got {n}")));
    }
    Ok(())
}

/// Mean and standard error of `(a x - y)^2` over `n` fresh pairs at `sigma`.
pub fn mc_conditional_risk(
    est: &LinearEstimator,
    model: &LinearGaussianModel,
    sigma: f64,
    n: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_count(n)?;
    let mut rng = rng(seed);
    let mut acc = Welford::default();
    for _ in 0..n {
        let pair = draw_pair(model, sigma, &mut rng);
        let e = est.apply(pair.x) - pair.y;
        acc.push(e * e);
    }
    Ok(acc.finish())
}

/// Mean and standard error of `log(max(loss, LOG_LOSS_FLOOR))`.
pub fn log_risk_of_losses(losses: impl IntoIterator<Item = f64>) -> Result<McEstimate> {
    let mut acc = Welford::default();
    for loss in losses {
        if loss.is_nan() || loss < 0.0 {
            return Err(Error::Domain(format!("loss must be nonnegative, got {loss}")));
        }
        acc.push(loss.max(LOG_LOSS_FLOOR).ln());
    }
    if acc.n == 0 {
        return Err(Error::Domain("no losses".into()));
    }
    Ok(acc.finish())
}

/// Monte Carlo estimate of `E[log loss | sigma]` for the linear estimator.
pub fn mc_log_conditional_risk(
    est: &LinearEstimator,
    model: &LinearGaussianModel,
    sigma: f64,
    n: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_count(n)?;
    let mut rng = rng(seed);
    log_risk_of_losses((0..n).map(|_| {
        let pair = draw_pair(model, sigma, &mut rng);
        let e = est.apply(pair.x) - pair.y;
        e * e
    }))
}

/// Monte Carlo risk profile over all bins. Bin `i` uses the stream
/// `derive_seed(seed, 0, i)`; bins are evaluated in parallel.
pub fn mc_risk_profile(
    est: &LinearEstimator,
    model: &LinearGaussianModel,
    grid: &NoiseGrid,
    n: usize,
    seed: u64,
) -> Result<RiskProfile> {
    let estimates: Vec<McEstimate> = grid
        .representatives()
        .par_iter()
        .enumerate()
        .map(|(bin, &sigma)| mc_conditional_risk(est, model, sigma, n, derive_seed(seed, 0, bin as u64)))
        .collect::<Result<_>>()?;
    let (values, stderr) = estimates.iter().map(|e| (e.estimate, e.stderr)).unzip();
    RiskProfile::with_stderr(grid, values, stderr)
}

/// Monte Carlo log-scale normalizer `L_delta(sigma) = exp(E[log loss])` of the
/// best individual estimator at every bin, with the standard error of the
/// underlying log-risk.
pub fn mc_log_baseline(
    model: &LinearGaussianModel,
    grid: &NoiseGrid,
    n: usize,
    seed: u64,
) -> Result<(BaselineRiskTable, Vec<f64>)> {
    let estimates: Vec<McEstimate> = grid
        .representatives()
        .par_iter()
        .enumerate()
        .map(|(bin, &sigma)| {
            let best = LinearEstimator::new(best_individual_gain(model, sigma));
            mc_log_conditional_risk(&best, model, sigma, n, derive_seed(seed, 0, bin as u64))
        })
        .collect::<Result<_>>()?;
    let values = estimates.iter().map(|e| e.estimate.exp()).collect();
    let log_stderr = estimates.iter().map(|e| e.stderr).collect();
    Ok((BaselineRiskTable::new(grid, values)?, log_stderr))
}
