//! Numerics for the bivariate skew-t distribution: joint and marginal
//! densities, a seeded sampler, second-order tail and quantile expansions,
//! and the lower tail dependence coefficient together with the power-law
//! rate at which the finite-level coefficient approaches it.

pub mod asymptotics;
pub mod error;
pub mod model;
pub mod numerics;
pub mod special;
pub mod tail;

pub use error::{Error, Result};
pub use model::{Margin, MarginalSkew, SamplePairs, SkewTParams};
pub use numerics::{fit_line, find_root_monotone, integrate, LineFit, QuadConfig, QuadResult};
pub use special::{
    log_gamma, student_t_cdf, student_t_pdf, student_t_quantile, DegreesOfFreedom,
};
