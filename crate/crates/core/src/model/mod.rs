//! Shared vocabulary: noise grids, distributions over bins, risk profiles and
//! the trainer contract the solvers drive.

mod distribution;
mod grid;
mod profile;
mod trainer;

pub use distribution::{normalize, BinDistribution, Role, NORMALIZATION_TOL};
pub use grid::{make_grid, NoiseGrid};
pub use profile::{
    gap_profile, psnr_from_mse, BaselineRiskTable, GapProfile, RiskProfile, DEFAULT_PROFILE_TOL,
};
pub use trainer::Trainer;
