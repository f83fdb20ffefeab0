use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A constructor or operation was handed an argument outside its domain
    /// of validity (non-finite, wrong sign, out of range).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The arguments are structurally valid but the requested evaluation is
    /// outside the regime where the representation holds.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature could not meet the requested tolerance within
    /// its subdivision budget. The best estimate so far is carried along.
    #[error(
        "quadrature tolerance not reached: estimate {estimate:e}, \
         error estimate {error_estimate:e} after {evaluations} evaluations"
    )]
    ToleranceNotReached {
        estimate: f64,
        error_estimate: f64,
        evaluations: usize,
    },

    /// The integrand returned NaN or an infinity at an interior node.
    #[error("integrand returned a non-finite value at x = {x:e}")]
    NonFiniteIntegrand { x: f64 },

    /// Root bracketing failed: the function has the same sign at both ends.
    #[error("no sign change over [{lo:e}, {hi:e}]")]
    NoBracket { lo: f64, hi: f64 },

    /// Least-squares input that does not determine a line.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// A rate-curve point sits below what the quadrature tolerance can
    /// resolve, so the log difference would be meaningless.
    #[error(
        "|lambda(u) - lambda_L| = {diff:e} at u = {u:e} is below the \
         quadrature resolution {resolution:e}"
    )]
    RateBelowResolution { u: f64, diff: f64, resolution: f64 },

    /// The skew-normal selection sampler failed to accept within the cap.
    #[error("selection sampler exceeded {0} proposals for a single draw")]
    RejectionCapExceeded(u64),

    /// A computed copula diagonal value escaped the Frechet-Hoeffding band
    /// by more than the numerical slack.
    #[error("Frechet-Hoeffding bounds violated at u = {u:e}: lambda(u) = {value:e}")]
    BoundsViolated { u: f64, value: f64 },

    /// A CSV of sample pairs could not be parsed.
    #[error("malformed CSV at line {line}: {message}")]
    MalformedCsv { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
