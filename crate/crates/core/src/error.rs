use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input contains a non-finite entry")]
    NonFiniteInput,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("alpha = {alpha} lies outside the admissible interval {interval}")]
    InfeasibleAlpha { alpha: f64, interval: String },
    #[error("admissible beta interval is empty at alpha = {alpha}")]
    EmptyBetaInterval { alpha: f64 },
    #[error("(alpha, beta) = ({alpha}, {beta}) lies outside the parameter box")]
    OutOfBox { alpha: f64, beta: f64 },
    #[error("problem has no known minimizer / optimal value")]
    MissingMinimizer,
    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("divergence detected at {at}")]
    Divergence { at: f64 },
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("gradient cache ∇f(x_(k-1)) required by Hessian-corrected variants")]
    MissingGradientCache,
    #[error("non-finite iterate after k = {last_finite_k}")]
    NonFiniteIterate { last_finite_k: usize },
    #[error("continuous power-decay perturbation needs t > 0, got {t}")]
    NonPositiveTime { t: f64 },
    #[error("insufficient data: need {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
