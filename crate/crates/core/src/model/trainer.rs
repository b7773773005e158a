use crate::error::Result;
use crate::model::distribution::BinDistribution;
use crate::model::grid::NoiseGrid;
use crate::model::profile::RiskProfile;

/// A family of estimators that can be fit under a sampling distribution over
/// noise levels and then scored per bin.
///
/// `train` realizes `argmin_f sum_i w_i R(f|sigma_i)` (exactly or
/// approximately); `evaluate` returns the conditional risk at every bin.
/// Both must be deterministic given `seed`.
pub trait Trainer {
    /// Opaque handle to a trained estimator.
    type Estimator: Clone + std::fmt::Debug;

    fn train(&mut self, weights: &BinDistribution, seed: u64) -> Result<Self::Estimator>;

    fn evaluate(
        &self,
        estimator: &Self::Estimator,
        grid: &NoiseGrid,
        seed: u64,
    ) -> Result<RiskProfile>;
}
