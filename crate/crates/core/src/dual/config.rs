use crate::error::{Error, Result};

/// Default round limit for empirical (SGD-trained) backends.
pub const EMPIRICAL_MAX_ROUNDS: usize = 25;

/// Multiplier step-size schedule. The coefficient is dimensionless; solvers
/// scale it to the problem (by `1 / max_i r_i` on the linear scale and by
/// `L_delta(sigma_i)` per bin on the log scale).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// `c` every round.
    Constant(f64),
    /// `c / sqrt(t)` at round `t >= 1`.
    Diminishing(f64),
}

impl StepSchedule {
    pub fn coefficient(&self) -> f64 {
        match *self {
            StepSchedule::Constant(c) | StepSchedule::Diminishing(c) => c,
        }
    }

    pub fn at(&self, round: usize) -> f64 {
        match *self {
            StepSchedule::Constant(c) => c,
            StepSchedule::Diminishing(c) => c / (round.max(1) as f64).sqrt(),
        }
    }
}

/// How the P2 multiplier is brought back onto the simplex after the gradient step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplexUpdate {
    /// Euclidean projection: `max(v - theta, 0)` with `theta` chosen so the
    /// result sums to one. Equivalent to keeping the epigraph variable `t` in
    /// the step.
    Project,
    /// Positive part followed by division by the sum.
    Renormalize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Gap tolerance (P1 only). On the log scale the constraint is
    /// `R(f|sigma) / L_delta(sigma) <= 1 + epsilon`.
    pub epsilon: f64,
    pub max_rounds: usize,
    pub schedule: StepSchedule,
    pub stop_tol: f64,
    /// Interpret the baseline table as `L_delta` and enforce the linearized
    /// log-scale constraint.
    pub log_scale: bool,
    pub seed: u64,
    /// Optional per-bin multipliers on the step size.
    pub bin_step_scale: Option<Vec<f64>>,
    pub simplex_update: SimplexUpdate,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon: f64::INFINITY,
            max_rounds: 200,
            schedule: StepSchedule::Constant(0.5),
            stop_tol: 1e-6,
            log_scale: false,
            seed: 0,
            bin_step_scale: None,
            simplex_update: SimplexUpdate::Project,
        }
    }
}

impl SolverConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        SolverConfig {
            epsilon,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(Error::Config(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if self.max_rounds == 0 {
            return Err(Error::Config("max_rounds must be at least 1".into()));
        }
        let c = self.schedule.coefficient();
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Config(format!("step coefficient must be positive, got {c}")));
        }
        if !(self.stop_tol > 0.0) || !self.stop_tol.is_finite() {
            return Err(Error::Config(format!("stop_tol must be positive, got {}", self.stop_tol)));
        }
        if let Some(scale) = &self.bin_step_scale {
            if scale.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
                return Err(Error::Config("per-bin step scales must be positive".into()));
            }
        }
        Ok(())
    }
}
