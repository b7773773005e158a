use crate::error::{Error, Result};
use crate::model::distribution::BinDistribution;
use crate::model::grid::NoiseGrid;

/// Default tolerance for comparing analytic risk profiles.
pub const DEFAULT_PROFILE_TOL: f64 = 1e-6;

/// Conditional risk `R(f|sigma)` of one estimator at every bin, optionally with
/// Monte Carlo standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskProfile {
    grid: NoiseGrid,
    values: Vec<f64>,
    stderr: Option<Vec<f64>>,
}

impl RiskProfile {
    pub fn new(grid: &NoiseGrid, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        check_nonnegative(&values)?;
        Ok(RiskProfile {
            grid: grid.clone(),
            values,
            stderr: None,
        })
    }

    pub fn with_stderr(grid: &NoiseGrid, values: Vec<f64>, stderr: Vec<f64>) -> Result<Self> {
        let mut profile = Self::new(grid, values)?;
        grid.check_len(stderr.len())?;
        check_nonnegative(&stderr)?;
        profile.stderr = Some(stderr);
        Ok(profile)
    }

    pub fn grid(&self) -> &NoiseGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn stderr(&self) -> Option<&[f64]> {
        self.stderr.as_deref()
    }

    /// Largest standard error, zero for exact profiles.
    pub fn max_stderr(&self) -> f64 {
        self.stderr
            .as_ref()
            .map(|s| s.iter().copied().fold(0.0, f64::max))
            .unwrap_or(0.0)
    }

    /// Overall risk `sum_i p_i R_i` under a testing distribution.
    pub fn overall(&self, p: &BinDistribution) -> Result<f64> {
        self.grid.ensure_same(p.grid())?;
        p.weighted_sum(&self.values)
    }
}

fn check_nonnegative(values: &[f64]) -> Result<()> {
    for (bin, &value) in values.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidRisk { bin, value });
        }
    }
    Ok(())
}

/// Per-bin reference risk: `r(sigma)` of the best individual estimator, or the
/// log-scale normalizer `L_delta(sigma)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRiskTable {
    grid: NoiseGrid,
    values: Vec<f64>,
}

impl BaselineRiskTable {
    pub fn new(grid: &NoiseGrid, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        check_nonnegative(&values)?;
        Ok(BaselineRiskTable {
            grid: grid.clone(),
            values,
        })
    }

    pub fn grid(&self) -> &NoiseGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// True when `r(sigma) <= R(f|sigma) + tol` at every bin.
    pub fn is_lower_envelope_of(&self, risk: &RiskProfile, tol: f64) -> Result<bool> {
        self.grid.ensure_same(risk.grid())?;
        Ok(self
            .values
            .iter()
            .zip(risk.values())
            .all(|(r, big_r)| *r <= big_r + tol))
    }
}

/// Per-bin risk gap. Entries may be slightly negative under evaluation noise.
#[derive(Debug, Clone, PartialEq)]
pub struct GapProfile {
    grid: NoiseGrid,
    values: Vec<f64>,
}

impl GapProfile {
    pub(crate) fn from_parts(grid: &NoiseGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.bin_count(), values.len());
        GapProfile {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &NoiseGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `max - min` over all bins.
    pub fn spread(&self) -> f64 {
        self.max() - self.min()
    }

    /// Index of the largest gap; ties resolve to the lowest bin.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best
    }
}

/// `R(f|sigma) - r(sigma)` per bin. No clamping is applied.
///
/// `gap + r` gives back `R` exactly when `r >= R / 2`. Outside that range the
/// sum can be off by an ulp, and in those cases no other f64 gap does better.
pub fn gap_profile(risk: &RiskProfile, baseline: &BaselineRiskTable) -> Result<GapProfile> {
    risk.grid().ensure_same(baseline.grid())?;
    let values = risk
        .values()
        .iter()
        .zip(baseline.values())
        .map(|(big_r, r)| big_r - r)
        .collect();
    Ok(GapProfile::from_parts(risk.grid(), values))
}

/// `-10 log10(mse)`.
pub fn psnr_from_mse(mse: f64) -> Result<f64> {
    if !(mse > 0.0) || !mse.is_finite() {
        return Err(Error::Domain(format!("psnr needs a positive finite mse, got {mse}")));
    }
    Ok(-10.0 * mse.log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::grid::make_grid;
    use proptest::prelude::*;

    #[test]
    fn gap_examples() {
        let g = make_grid(0.0, 20.0, 2).unwrap();
        let risk = RiskProfile::new(&g, vec![50.0, 60.0]).unwrap();
        let base = BaselineRiskTable::new(&g, vec![50.0, 55.0]).unwrap();
        assert_eq!(gap_profile(&risk, &base).unwrap().values(), &[0.0, 5.0]);

        let same = BaselineRiskTable::new(&g, vec![50.0, 60.0]).unwrap();
        assert_eq!(gap_profile(&risk, &same).unwrap().values(), &[0.0, 0.0]);
    }

    #[test]
    fn gap_rejects_mismatched_grids() {
        let g1 = make_grid(0.0, 20.0, 2).unwrap();
        let g2 = make_grid(0.0, 10.0, 2).unwrap();
        let risk = RiskProfile::new(&g1, vec![1.0, 2.0]).unwrap();
        let base = BaselineRiskTable::new(&g2, vec![1.0, 2.0]).unwrap();
        assert!(matches!(gap_profile(&risk, &base), Err(Error::GridMismatch)));
    }

    #[test]
    fn gap_may_go_negative() {
        let g = make_grid(0.0, 20.0, 1).unwrap();
        let risk = RiskProfile::new(&g, vec![9.99]).unwrap();
        let base = BaselineRiskTable::new(&g, vec![10.0]).unwrap();
        assert!(gap_profile(&risk, &base).unwrap().values()[0] < 0.0);
    }

    #[test]
    fn risk_profile_validation() {
        let g = make_grid(0.0, 20.0, 2).unwrap();
        assert!(RiskProfile::new(&g, vec![1.0, -1.0]).is_err());
        assert!(RiskProfile::new(&g, vec![1.0, f64::NAN]).is_err());
        assert!(RiskProfile::with_stderr(&g, vec![1.0, 1.0], vec![0.1]).is_err());
        let p = RiskProfile::with_stderr(&g, vec![1.0, 2.0], vec![0.1, 0.3]).unwrap();
        assert_eq!(p.max_stderr(), 0.3);
    }

    #[test]
    fn psnr_examples() {
        assert_eq!(psnr_from_mse(1.0).unwrap(), 0.0);
        assert!((psnr_from_mse(0.01).unwrap() - 20.0).abs() < 1e-12);
        // 10^(-2.8) is the mse that maps to 28 dB; 0.001585 is its rounded value.
        let exact = 10f64.powf(-28.0 / 10.0);
        assert!((psnr_from_mse(exact).unwrap() - 28.0).abs() < 1e-12);
        assert!((psnr_from_mse(0.001585).unwrap() - 28.0).abs() < 1e-3);
        assert!(psnr_from_mse(0.0).is_err());
        assert!(psnr_from_mse(-1.0).is_err());
    }

    #[test]
    fn table_one_gap_at_first_bin() {
        // Ideal 38.04 dB vs uniform 37.24 dB at the [0, 10] bin.
        let gap = 38.04 - 37.24;
        assert_eq!(format!("{gap:.2}"), "0.80");
    }

    fn single_gap(big_r: f64, r: f64) -> f64 {
        let g = make_grid(0.0, 1.0, 1).unwrap();
        gap_profile(
            &RiskProfile::new(&g, vec![big_r]).unwrap(),
            &BaselineRiskTable::new(&g, vec![r]).unwrap(),
        )
        .unwrap()
        .values()[0]
    }

    fn reachable(big_r: f64, r: f64, around: f64, ulps: usize) -> bool {
        let mut x = around;
        for _ in 0..ulps {
            x = x.next_down();
        }
        for _ in 0..2 * ulps + 1 {
            if x + r == big_r {
                return true;
            }
            x = x.next_up();
        }
        false
    }

    #[test]
    fn gap_reconstruction_can_be_unreachable() {
        // r sits half an ulp of R off the grid, so x + r ties to even for
        // every x near R - r and no f64 gap gives back R
        let (big_r, r) = (3666.911901951466, 521.5360351299671);
        assert!(!reachable(big_r, r, big_r - r, 2000));
        let g = single_gap(big_r, r);
        assert!((g + r - big_r).abs() <= f64::EPSILON * big_r);
    }

    proptest! {
        #[test]
        fn gap_plus_baseline_is_the_closest_reconstruction(
            pairs in prop::collection::vec((0.0f64..1e4, 0.0f64..1e4), 1..32)
        ) {
            let g = make_grid(0.0, 1.0, pairs.len()).unwrap();
            // either order: Monte Carlo risks can dip below the baseline
            let base: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let risk: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let r = RiskProfile::new(&g, risk.clone()).unwrap();
            let b = BaselineRiskTable::new(&g, base.clone()).unwrap();
            let gap = gap_profile(&r, &b).unwrap();
            for i in 0..risk.len() {
                let back = gap.values()[i] + base[i];
                if back != risk[i] {
                    prop_assert!(!reachable(risk[i], base[i], risk[i] - base[i], 8));
                }
                prop_assert!((back - risk[i]).abs() <= 2.0 * f64::EPSILON * risk[i].max(base[i]));
            }
        }

        #[test]
        fn gap_reconstruction_is_exact_when_baseline_is_at_least_half(
            r in 1e-6f64..1e4, frac in 0.5f64..=1.0
        ) {
            let base = r * frac;
            prop_assert_eq!(single_gap(r, base) + base, r);
        }

        #[test]
        fn psnr_strictly_decreasing(a in 1e-12f64..1e6, b in 1e-12f64..1e6) {
            prop_assume!(a != b);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(psnr_from_mse(lo).unwrap() > psnr_from_mse(hi).unwrap());
        }
    }
}
