use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("grid point count {0} is odd")]
    OddN(usize),
    #[error("grid point count {0} is below the minimum of 8")]
    TooFewPoints(usize),
    #[error("unsupported dimension {0}; only 1 and 2 are allowed")]
    BadDimension(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("mollifier radius {epsilon} outside [{min}, {max}]")]
    EpsilonOutOfRange { epsilon: f64, min: f64, max: f64 },
    #[error("derivative order {0} exceeds 2")]
    OrderTooHigh(usize),
    #[error("exponent p = {0} is below 1")]
    ExponentBelowOne(f64),
    #[error("time grid error: {0}")]
    TimeGrid(String),
    #[error("T/dt = {0} is not an integer")]
    NonIntegralSteps(f64),
    #[error("trajectory became non-finite at step {step}")]
    Trajectory { step: usize },
    #[error("flow map is not injective (min simplex orientation {min_orientation})")]
    NotInjective { min_orientation: f64 },
    #[error("inversion stagnated at node {node} (residual {residual})")]
    Stagnation { node: usize, residual: f64 },
    #[error("Picard iteration did not converge in {iterations} iterations (defect {defect})")]
    NoConvergence { iterations: usize, defect: f64 },
    #[error("Lipschitz constant {0} is not below 1")]
    LipTooLarge(f64),
    #[error("support of the test function leaves the central half of the box")]
    SupportViolation,
    #[error("need at least {needed} entries, got {got}")]
    TooFewEntries { needed: usize, got: usize },
    #[error("i/o: {0}")]
    Io(String),
    #[error("format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
