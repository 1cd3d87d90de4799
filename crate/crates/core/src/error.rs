use thiserror::Error;

/// Errors surfaced by the inference toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A simulation produced a non-finite discrepancy value.
    #[error("non-finite discrepancy {value} at parameter {parameter:?}")]
    NonFiniteDiscrepancy { value: f64, parameter: Vec<f64> },

    /// A weight function was evaluated outside its domain.
    #[error("weight domain error: {0}")]
    WeightDomain(String),

    /// Rejection sampling accepted nothing; the smallest simulated
    /// discrepancy is reported so the caller can pick a feasible threshold.
    #[error("rejection sampler accepted 0 of {proposed} draws (minimum discrepancy seen: {min_discrepancy})")]
    ZeroAcceptance { proposed: usize, min_discrepancy: f64 },

    /// Every grid point carries zero posterior mass.
    #[error("posterior improper on grid: all log-densities are -inf")]
    ImproperPosterior,

    /// Two grids that must match (points and quadrature weights) do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// An invalid argument that is not a configuration-file problem.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Configuration file failed to parse or validate.
    #[error("config error: {0}")]
    Config(String),

    /// A numerical routine failed (factorization, divergence, overflow).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A calibration threshold sits at or below the minimal discrepancy.
    #[error("threshold below minimal discrepancy: epsilon {epsilon} <= delta0 {delta0}")]
    ThresholdBelowMinimum { epsilon: f64, delta0: f64 },

    /// An external simulator subprocess misbehaved.
    #[error("simulation error: {0}")]
    Simulation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
