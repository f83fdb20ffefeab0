//! Closed-form second-order tail behaviour of the skew-t margins: the
//! constants (c, d) of the marginal CDF expansion
//! F(y) = c |y|^{-eta} (1 + d y^{-2} + O(y^{-4})) as y -> -inf, the matching
//! quantile expansion, the cross-quantile map F2^{-1}(F1(y)) with its
//! equiskewness cancellation, and the limiting integration cutoffs.

use crate::error::{Error, Result};
use crate::model::{Margin, SkewTParams};
use crate::special::{log_gamma_lanczos, student_t_cdf, student_t_pdf, DegreesOfFreedom};
use std::f64::consts::PI;

/// Per-margin constants of the marginal tail expansion.
#[derive(Debug, Clone, Copy)]
pub struct TailExpansion {
    pub margin: Margin,
    /// Leading constant c > 0 in F(y) ~ c |y|^{-eta}.
    pub c: f64,
    /// Second-order constant d in the bracket (1 + d y^{-2}).
    pub d: f64,
}

/// Coefficients of the cross-quantile map
/// F2^{-1}(F1(y)) = ratio * y * (1 - first_order / y^2 + O(y^{-4})).
#[derive(Debug, Clone, Copy)]
pub struct CrossQuantileExpansion {
    pub ratio: f64,
    pub first_order: f64,
}

/// Limiting cutoffs of the tail-dependence integrals. l1 = -a21, l2 = -a12.
#[derive(Debug, Clone, Copy)]
pub struct IntegrationLimits {
    pub a21: f64,
    pub a12: f64,
    pub l1: f64,
    pub l2: f64,
}

/// F_{t_{eta+1}}(-lambda sqrt(eta+1)) and its density at the same point,
/// the pair every constant below is built from.
fn skew_weight(eta: f64, lambda: f64) -> (f64, f64) {
    let nu = DegreesOfFreedom::new_unchecked(eta + 1.0);
    let arg = -lambda * (eta + 1.0).sqrt();
    (student_t_cdf(arg, nu), student_t_pdf(arg, nu))
}

/// Tail expansion constants of the requested margin.
pub fn tail_constants(p: &SkewTParams, margin: Margin) -> TailExpansion {
    let eta = p.eta();
    let lambda = p.lambda(margin);
    let (big_f, little_f) = skew_weight(eta, lambda);
    let ln_c = (2.0_f64).ln() + log_gamma_lanczos(0.5 * (eta + 1.0))
        + 0.5 * (eta + 1.0) * eta.ln()
        - 0.5 * (PI * eta).ln()
        - log_gamma_lanczos(0.5 * eta)
        + big_f.ln()
        - eta.ln();
    let c = ln_c.exp();
    let d = -eta * eta * (eta + 1.0) / (2.0 * (eta + 2.0))
        + eta * eta * little_f * lambda * (eta + 1.0).sqrt() / (2.0 * (eta + 2.0) * big_f);
    TailExpansion { margin, c, d }
}

/// Second-order lower-quantile asymptote
/// -c^{1/eta} u^{-1/eta} (1 + d c^{-2/eta} u^{2/eta} / eta).
///
/// Intended for u <= 0.1; it still evaluates outside that regime but the
/// truncated remainder is only small as u -> 0+.
pub fn quantile_asymptotic(p: &SkewTParams, margin: Margin, u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!(
            "quantile probability must lie in (0,1), got {u}"
        )));
    }
    let eta = p.eta();
    let t = tail_constants(p, margin);
    let lead = -t.c.powf(1.0 / eta) * u.powf(-1.0 / eta);
    Ok(lead * (1.0 + t.d / t.c.powf(2.0 / eta) * u.powf(2.0 / eta) / eta))
}

/// Expansion of c(y) = F2^{-1}(F1(y)) as y -> -inf. With theta1 = theta2
/// the first-order coefficient cancels exactly.
pub fn cross_quantile_expansion(p: &SkewTParams) -> CrossQuantileExpansion {
    let eta = p.eta();
    let skew = p.marginal_skewness();
    let (f1, _) = skew_weight(eta, skew.lambda1);
    let (f2, _) = skew_weight(eta, skew.lambda2);
    let t1 = tail_constants(p, Margin::One);
    let t2 = tail_constants(p, Margin::Two);
    CrossQuantileExpansion {
        ratio: (f2 / f1).powf(1.0 / eta),
        first_order: (t1.d - t2.d * (t1.c / t2.c).powf(2.0 / eta)) / eta,
    }
}

/// Limits of integration for the tail-dependence integrals.
pub fn integration_limits(p: &SkewTParams) -> IntegrationLimits {
    let eta = p.eta();
    let rho = p.rho();
    let skew = p.marginal_skewness();
    let (f1, _) = skew_weight(eta, skew.lambda1);
    let (f2, _) = skew_weight(eta, skew.lambda2);
    let scale = ((eta + 1.0) / (1.0 - rho * rho)).sqrt();
    let a21 = ((f2 / f1).powf(1.0 / eta) - rho) * scale;
    let a12 = ((f1 / f2).powf(1.0 / eta) - rho) * scale;
    IntegrationLimits {
        a21,
        a12,
        l1: -a21,
        l2: -a12,
    }
}
