use crate::error::{Error, Result};
use crate::model::grid::NoiseGrid;

/// Absolute tolerance on the weight sum of a normalized distribution.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// How a weight vector is meant to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// A probability distribution over bins (`p`, `pi`, or a simplex multiplier).
    Normalized,
    /// An unnormalized nonnegative multiplier (the P1 `lambda`).
    Multiplier,
}

/// Nonnegative weights over the bins of a [`NoiseGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct BinDistribution {
    grid: NoiseGrid,
    weights: Vec<f64>,
    role: Role,
}

impl BinDistribution {
    /// Unnormalized nonnegative weights.
    pub fn multiplier(grid: &NoiseGrid, weights: Vec<f64>) -> Result<Self> {
        grid.check_len(weights.len())?;
        check_weights(&weights)?;
        Ok(BinDistribution {
            grid: grid.clone(),
            weights,
            role: Role::Multiplier,
        })
    }

    pub fn zeros(grid: &NoiseGrid) -> Self {
        BinDistribution {
            grid: grid.clone(),
            weights: vec![0.0; grid.bin_count()],
            role: Role::Multiplier,
        }
    }

    /// Weights that already sum to one within [`NORMALIZATION_TOL`].
    pub fn normalized(grid: &NoiseGrid, weights: Vec<f64>) -> Result<Self> {
        grid.check_len(weights.len())?;
        check_weights(&weights)?;
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Unnormalized { sum });
        }
        Ok(BinDistribution {
            grid: grid.clone(),
            weights,
            role: Role::Normalized,
        })
    }

    /// Arbitrary nonnegative weights, scaled onto the simplex.
    pub fn from_raw(grid: &NoiseGrid, weights: Vec<f64>) -> Result<Self> {
        normalize(&Self::multiplier(grid, weights)?)
    }

    pub fn uniform(grid: &NoiseGrid) -> Self {
        let n = grid.bin_count();
        BinDistribution {
            grid: grid.clone(),
            weights: vec![1.0 / n as f64; n],
            role: Role::Normalized,
        }
    }

    pub fn point_mass(grid: &NoiseGrid, bin: usize) -> Result<Self> {
        grid.check_bin(bin)?;
        let mut weights = vec![0.0; grid.bin_count()];
        weights[bin] = 1.0;
        Ok(BinDistribution {
            grid: grid.clone(),
            weights,
            role: Role::Normalized,
        })
    }

    pub fn grid(&self) -> &NoiseGrid {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// Errors unless the distribution is tagged normalized and sums to one.
    pub fn require_normalized(&self) -> Result<()> {
        let sum = self.total();
        if self.role != Role::Normalized || (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Unnormalized { sum });
        }
        Ok(())
    }

    /// `sum_i w_i * values_i`, the bin-level replacement for an integral over sigma.
    pub fn weighted_sum(&self, values: &[f64]) -> Result<f64> {
        self.grid.check_len(values.len())?;
        Ok(self
            .weights
            .iter()
            .zip(values)
            .map(|(w, v)| w * v)
            .sum())
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    for (bin, &value) in weights.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidWeight { bin, value });
        }
    }
    Ok(())
}

/// Scales the weights to sum to one. Distributions whose sum is already one up
/// to accumulated rounding are returned unchanged, so the operation is
/// idempotent bit-for-bit.
pub fn normalize(d: &BinDistribution) -> Result<BinDistribution> {
    let sum = d.total();
    if sum <= 0.0 {
        return Err(Error::DegenerateDistribution);
    }
    let rounding = 4.0 * f64::EPSILON * d.len() as f64;
    let weights = if (sum - 1.0).abs() <= rounding {
        d.weights.clone()
    } else {
        d.weights.iter().map(|w| w / sum).collect()
    };
    Ok(BinDistribution {
        grid: d.grid.clone(),
        weights,
        role: Role::Normalized,
    })
}
