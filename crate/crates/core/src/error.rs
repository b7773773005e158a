use thiserror::Error;

/// Errors raised by grid construction, solvers, trainers and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid noise range: need 0 <= sigma_min < sigma_max and bin_count >= 1 (got [{sigma_min}, {sigma_max}] with {bin_count} bins)")]
    InvalidRange {
        sigma_min: f64,
        sigma_max: f64,
        bin_count: usize,
    },

    #[error("degenerate distribution: all weights are zero")]
    DegenerateDistribution,

    #[error("distribution is not normalized (weights sum to {sum})")]
    Unnormalized { sum: f64 },

    #[error("invalid weight {value} at bin {bin}: weights must be finite and nonnegative")]
    InvalidWeight { bin: usize, value: f64 },

    #[error("invalid risk value {value} at bin {bin}")]
    InvalidRisk { bin: usize, value: f64 },

    #[error("grid mismatch: operands were built on different noise grids")]
    GridMismatch,

    #[error("length mismatch: expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("bin index {bin} out of range for a grid with {bin_count} bins")]
    BinOutOfRange { bin: usize, bin_count: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible: no candidate keeps the max gap within {epsilon} (smallest achievable max gap is {epsilon_min})")]
    Infeasible { epsilon: f64, epsilon_min: f64 },

    #[error("sgd diverged: |a| = {gain} exceeded the bound after {steps} steps (step size too large)")]
    Diverged { gain: f64, steps: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed record: {0}")]
    Record(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
