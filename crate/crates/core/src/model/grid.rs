use crate::error::{Error, Result};

/// Equal-width discretization of a noise range into bins, each represented by
/// its midpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseGrid {
    sigma_min: f64,
    sigma_max: f64,
    representatives: Vec<f64>,
}

impl NoiseGrid {
    pub fn new(sigma_min: f64, sigma_max: f64, bin_count: usize) -> Result<Self> {
        let valid = sigma_min.is_finite()
            && sigma_max.is_finite()
            && sigma_min >= 0.0
            && sigma_min < sigma_max
            && bin_count >= 1;
        if !valid {
            return Err(Error::InvalidRange {
                sigma_min,
                sigma_max,
                bin_count,
            });
        }
        let mut grid = NoiseGrid {
            sigma_min,
            sigma_max,
            representatives: Vec::with_capacity(bin_count),
        };
        for i in 0..bin_count {
            let (lo, hi) = grid.edges_for(i, bin_count);
            grid.representatives.push(0.5 * (lo + hi));
        }
        Ok(grid)
    }

    // Edges are computed from the endpoints directly so they do not drift
    // with the bin index.
    fn edges_for(&self, bin: usize, bin_count: usize) -> (f64, f64) {
        let span = self.sigma_max - self.sigma_min;
        let n = bin_count as f64;
        let lo = self.sigma_min + span * (bin as f64) / n;
        let hi = if bin + 1 == bin_count {
            self.sigma_max
        } else {
            self.sigma_min + span * ((bin + 1) as f64) / n
        };
        (lo, hi)
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    pub fn bin_count(&self) -> usize {
        self.representatives.len()
    }

    pub fn bin_width(&self) -> f64 {
        (self.sigma_max - self.sigma_min) / self.bin_count() as f64
    }

    /// Representative noise level of every bin, strictly increasing.
    pub fn representatives(&self) -> &[f64] {
        &self.representatives
    }

    /// `[lo, hi]` edges of bin `bin`.
    pub fn bin_edges(&self, bin: usize) -> Result<(f64, f64)> {
        self.check_bin(bin)?;
        Ok(self.edges_for(bin, self.bin_count()))
    }

    pub(crate) fn check_bin(&self, bin: usize) -> Result<()> {
        if bin < self.bin_count() {
            Ok(())
        } else {
            Err(Error::BinOutOfRange {
                bin,
                bin_count: self.bin_count(),
            })
        }
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len == self.bin_count() {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                expected: self.bin_count(),
                got: len,
            })
        }
    }

    pub(crate) fn ensure_same(&self, other: &NoiseGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Builds a grid of `bin_count` equal-width bins over `[sigma_min, sigma_max]`.
pub fn make_grid(sigma_min: f64, sigma_max: f64, bin_count: usize) -> Result<NoiseGrid> {
    NoiseGrid::new(sigma_min, sigma_max, bin_count)
}
