//! Choosing how to spread training samples across noise levels so that one
//! estimator stays close to the best per-level estimator everywhere.
//!
//! The crate is organized as
//!
//! * [`model`]: noise grids, distributions over bins, risk and gap profiles,
//!   and the [`Trainer`](model::Trainer) abstraction.
//! * [`linear`]: the scalar linear-Gaussian model with closed-form risks and a
//!   brute-force oracle.
//! * [`empirical`]: seeded sampling, Monte Carlo risk estimates and an SGD
//!   trainer.
//! * [`dual`]: dual ascent for the constrained problem and its min-max
//!   counterpart.
//! * [`cli`]: configuration, run records and reports behind the binary.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dual;
pub mod empirical;
pub mod error;
pub mod linear;
pub mod model;

pub use error::{Error, Result};
