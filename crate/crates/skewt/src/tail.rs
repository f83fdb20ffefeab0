//! Lower tail dependence of the bivariate skew-t: the exact limit lambda_L,
//! the finite-level coefficient lambda_L(u) = C(u,u)/u, the diagonal
//! derivative of the copula, the rate constants governing
//! |lambda_L(u) - lambda_L| ~ const * u^{2/eta}, log-log rate fitting, and
//! the empirical estimator from samples.

use crate::asymptotics::{self, TailExpansion};
use crate::error::{Error, Result};
use crate::model::{Margin, SkewTParams};
use crate::numerics::{self, LineFit, QuadConfig};
use crate::special::{student_t_cdf, student_t_pdf, DegreesOfFreedom};

/// Which coordinate is conditioned on. `X2GivenX1` is the direction
/// P(X2 <= . | X1 = y).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    X2GivenX1,
    X1GivenX2,
}

impl Direction {
    fn conditioning_margin(self) -> Margin {
        match self {
            Direction::X2GivenX1 => Margin::One,
            Direction::X1GivenX2 => Margin::Two,
        }
    }

    fn other_margin(self) -> Margin {
        match self {
            Direction::X2GivenX1 => Margin::Two,
            Direction::X1GivenX2 => Margin::One,
        }
    }
}

/// Scalar pieces of the exact conditional representation
/// P(X_other <= c | X_cond = y) = int_{-inf}^{L(y,c)} f_{t_{eta+1}}(z) tau(z,y) dz
/// for y < 0, together with their y -> -inf limits.
#[derive(Debug, Clone)]
pub struct ConditionalKernel {
    eta: f64,
    rho: f64,
    lambda_cond: f64,
    theta_other: f64,
    /// theta_cond + rho * theta_other, the shift entering b(z).
    theta_shift: f64,
    /// F_{t_{eta+1}} at -lambda_cond sqrt(eta+1) (limit of the denominator).
    big_f_cond: f64,
    big_f_other: f64,
    dof_e1: DegreesOfFreedom,
    dof_e2: DegreesOfFreedom,
    tail_cond: TailExpansion,
    tail_other: TailExpansion,
}

impl ConditionalKernel {
    pub fn new(p: &SkewTParams, direction: Direction) -> Self {
        let eta = p.eta();
        let rho = p.rho();
        let (theta_cond, theta_other) = match direction {
            Direction::X2GivenX1 => (p.theta1(), p.theta2()),
            Direction::X1GivenX2 => (p.theta2(), p.theta1()),
        };
        let skew = p.marginal_skewness();
        let (lambda_cond, lambda_other) = match direction {
            Direction::X2GivenX1 => (skew.lambda1, skew.lambda2),
            Direction::X1GivenX2 => (skew.lambda2, skew.lambda1),
        };
        let dof_e1 = DegreesOfFreedom::new_unchecked(eta + 1.0);
        let dof_e2 = DegreesOfFreedom::new_unchecked(eta + 2.0);
        let root_e1 = (eta + 1.0).sqrt();
        ConditionalKernel {
            eta,
            rho,
            lambda_cond,
            theta_other,
            theta_shift: theta_cond + rho * theta_other,
            big_f_cond: student_t_cdf(-lambda_cond * root_e1, dof_e1),
            big_f_other: student_t_cdf(-lambda_other * root_e1, dof_e1),
            dof_e1,
            dof_e2,
            tail_cond: asymptotics::tail_constants(p, direction.conditioning_margin()),
            tail_other: asymptotics::tail_constants(p, direction.other_margin()),
        }
    }

    fn shape(&self, z: f64) -> f64 {
        ((self.eta + 2.0) / (1.0 + z * z / (self.eta + 1.0))).sqrt()
    }

    pub fn a(&self, z: f64) -> f64 {
        self.theta_other * ((1.0 - self.rho * self.rho) / (self.eta + 1.0)).sqrt()
            * self.shape(z)
            * z
    }

    pub fn b(&self, z: f64) -> f64 {
        -self.theta_shift * self.shape(z)
    }

    /// tau(z, y) for a finite conditioning point y < 0.
    pub fn tau(&self, z: f64, y: f64) -> f64 {
        debug_assert!(y < 0.0);
        let w = (1.0 + self.eta / (y * y)).sqrt().recip();
        let num = student_t_cdf(self.a(z) + self.b(z) * w, self.dof_e2);
        let den = student_t_cdf(
            -self.lambda_cond * (self.eta + 1.0).sqrt() * w,
            self.dof_e1,
        );
        num / den
    }

    /// Pointwise limit tau(z, *) of tau(z, y) as y -> -inf.
    pub fn tau_limit(&self, z: f64) -> f64 {
        student_t_cdf(self.a(z) + self.b(z), self.dof_e2) / self.big_f_cond
    }

    /// Upper integration limit L(y) for cutoff c: (c - rho y) / s(y).
    pub fn cutoff(&self, y: f64, c: f64) -> f64 {
        let s = ((self.eta + y * y) * (1.0 - self.rho * self.rho) / (self.eta + 1.0)).sqrt();
        (c - self.rho * y) / s
    }

    /// Limit of the cutoff along c = c(y), equal to -a_{2.1} (or -a_{1.2}).
    pub fn cutoff_limit(&self) -> f64 {
        -(self.ratio() - self.rho) * ((self.eta + 1.0) / (1.0 - self.rho * self.rho)).sqrt()
    }

    /// (F_{t_{eta+1}}(-lambda_other sqrt(eta+1)) / F_{t_{eta+1}}(-lambda_cond sqrt(eta+1)))^{1/eta}
    pub fn ratio(&self) -> f64 {
        (self.big_f_other / self.big_f_cond).powf(1.0 / self.eta)
    }

    /// Oriented first-order cross-quantile coefficient
    /// (d_cond - d_other (c_cond/c_other)^{2/eta}) / eta.
    fn first_order(&self) -> f64 {
        (self.tail_cond.d
            - self.tail_other.d * (self.tail_cond.c / self.tail_other.c).powf(2.0 / self.eta))
            / self.eta
    }
}

fn tighten(cfg: &QuadConfig) -> QuadConfig {
    QuadConfig {
        abs_tol: (cfg.abs_tol * 1e-2).max(1e-15),
        rel_tol: (cfg.rel_tol * 1e-2).max(1e-13),
        max_depth: cfg.max_depth,
    }
}

/// P(X_other <= c | X_cond = y) through the exact conditional
/// representation, valid for y < 0.
pub fn conditional_tail_cdf(
    p: &SkewTParams,
    direction: Direction,
    y: f64,
    c: f64,
    cfg: &QuadConfig,
) -> Result<f64> {
    if !y.is_finite() || y >= 0.0 {
        return Err(Error::Domain(format!(
            "conditional representation requires a finite conditioning point y < 0, got {y}"
        )));
    }
    if c.is_nan() {
        return Err(Error::Domain("cutoff c is NaN".to_string()));
    }
    if c == f64::INFINITY {
        return Ok(1.0);
    }
    if c == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let kernel = ConditionalKernel::new(p, direction);
    let upper = kernel.cutoff(y, c);
    let dof_e1 = kernel.dof_e1;
    let r = numerics::integrate(
        |z| student_t_pdf(z, dof_e1) * kernel.tau(z, y),
        f64::NEG_INFINITY,
        upper,
        cfg,
    )?;
    Ok(r.value.clamp(0.0, 1.0))
}

fn joint_tail_probability_detail(
    p: &SkewTParams,
    y1: f64,
    y2: f64,
    cfg: &QuadConfig,
) -> Result<(f64, f64)> {
    if y1.is_nan() || y2.is_nan() {
        return Err(Error::Domain("joint probability bounds are NaN".to_string()));
    }
    if y1 == f64::NEG_INFINITY || y2 == f64::NEG_INFINITY {
        return Ok((0.0, 0.0));
    }
    if y1 == f64::INFINITY {
        return Ok((p.marginal_cdf(Margin::Two, y2, cfg)?, cfg.abs_tol));
    }
    if y2 == f64::INFINITY {
        return Ok((p.marginal_cdf(Margin::One, y1, cfg)?, cfg.abs_tol));
    }
    if y1 < 0.0 {
        // Outer margin integral of the exact conditional representation:
        // far better conditioned than raw cubature deep in the tail.
        let inner_cfg = tighten(cfg);
        let kernel = ConditionalKernel::new(p, Direction::X2GivenX1);
        let dof_e1 = kernel.dof_e1;
        let r = numerics::try_integrate(
            |x| {
                let upper = kernel.cutoff(x, y2);
                let cond = numerics::integrate(
                    |z| student_t_pdf(z, dof_e1) * kernel.tau(z, x),
                    f64::NEG_INFINITY,
                    upper,
                    &inner_cfg,
                )?;
                Ok(p.marginal_pdf(Margin::One, x) * cond.value.clamp(0.0, 1.0))
            },
            f64::NEG_INFINITY,
            y1,
            cfg,
        )?;
        Ok((r.value.clamp(0.0, 1.0), r.error_estimate))
    } else {
        joint_tail_probability_nested(p, y1, y2, cfg)
    }
}

/// P(X1 <= y1, X2 <= y2).
pub fn joint_tail_probability(
    p: &SkewTParams,
    y1: f64,
    y2: f64,
    cfg: &QuadConfig,
) -> Result<f64> {
    joint_tail_probability_detail(p, y1, y2, cfg).map(|(v, _)| v)
}

/// Reference path for the joint probability: nested quadrature of the joint
/// density, independent of the conditional representation.
pub fn joint_tail_probability_nested(
    p: &SkewTParams,
    y1: f64,
    y2: f64,
    cfg: &QuadConfig,
) -> Result<(f64, f64)> {
    let inner_cfg = tighten(cfg);
    let r = numerics::try_integrate(
        |x1| {
            numerics::integrate(|x2| p.joint_pdf(x1, x2), f64::NEG_INFINITY, y2, &inner_cfg)
                .map(|inner| inner.value)
        },
        f64::NEG_INFINITY,
        y1,
        cfg,
    )?;
    Ok((r.value.clamp(0.0, 1.0), r.error_estimate))
}

fn lambda_limit_half(p: &SkewTParams, direction: Direction, cfg: &QuadConfig) -> Result<(f64, f64)> {
    let kernel = ConditionalKernel::new(p, direction);
    let dof_e1 = kernel.dof_e1;
    let r = numerics::integrate(
        |z| student_t_pdf(z, dof_e1) * kernel.tau_limit(z),
        f64::NEG_INFINITY,
        kernel.cutoff_limit(),
        cfg,
    )?;
    Ok((r.value, r.error_estimate))
}

/// lambda_L together with the quadrature error estimate of the two
/// integrals that form it.
pub fn lambda_limit_with_error(p: &SkewTParams, cfg: &QuadConfig) -> Result<(f64, f64)> {
    let (h1, e1) = lambda_limit_half(p, Direction::X2GivenX1, cfg)?;
    let (h2, e2) = lambda_limit_half(p, Direction::X1GivenX2, cfg)?;
    Ok((h1 + h2, e1 + e2))
}

/// The lower tail dependence coefficient lambda_L, as the sum of the two
/// limiting conditional probabilities. Always positive for this family.
pub fn lambda_limit(p: &SkewTParams, cfg: &QuadConfig) -> Result<f64> {
    lambda_limit_with_error(p, cfg).map(|(v, _)| v)
}

fn lambda_of_u_detail(p: &SkewTParams, u: f64, cfg: &QuadConfig) -> Result<(f64, f64)> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!(
            "lambda_of_u requires u in (0,1), got {u}"
        )));
    }
    let y1 = p.marginal_quantile(Margin::One, u, cfg)?;
    let y2 = p.marginal_quantile(Margin::Two, u, cfg)?;
    let (c_uu, err) = joint_tail_probability_detail(p, y1, y2, cfg)?;
    let value = c_uu / u;
    let err_scaled = err / u;
    // Frechet-Hoeffding band, with slack for quadrature and inversion noise.
    let lower = ((2.0 * u - 1.0) / u).max(0.0);
    let slack = 4.0 * err_scaled + 1e-8;
    if value < lower - slack || value > 1.0 + slack {
        return Err(Error::BoundsViolated { u, value });
    }
    Ok((value.clamp(lower, 1.0), err_scaled))
}

/// The finite-level coefficient lambda_L(u) = C(u,u)/u.
pub fn lambda_of_u(p: &SkewTParams, u: f64, cfg: &QuadConfig) -> Result<f64> {
    lambda_of_u_detail(p, u, cfg).map(|(v, _)| v)
}

/// dC(u,u)/du as the sum of the two conditional probabilities at the
/// u-quantiles. Requires both quantiles negative, which is the regime of
/// the conditional representation.
pub fn copula_diag_derivative(p: &SkewTParams, u: f64, cfg: &QuadConfig) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!(
            "copula_diag_derivative requires u in (0,1), got {u}"
        )));
    }
    let y1 = p.marginal_quantile(Margin::One, u, cfg)?;
    let y2 = p.marginal_quantile(Margin::Two, u, cfg)?;
    if y1 >= 0.0 || y2 >= 0.0 {
        return Err(Error::Domain(format!(
            "both u-quantiles must be negative, got ({y1}, {y2}) at u = {u}"
        )));
    }
    let s21 = conditional_tail_cdf(p, Direction::X2GivenX1, y1, y2, cfg)?;
    let s12 = conditional_tail_cdf(p, Direction::X1GivenX2, y2, y1, cfg)?;
    Ok(s21 + s12)
}

/// Direction-specific rate constants and the asymptotic prefactor of
/// |lambda_L(u) - lambda_L|.
#[derive(Debug, Clone, Copy)]
pub struct RateConstants {
    pub k21: f64,
    pub k12: f64,
    /// |k21 + k12|, the limit of the slowly varying factor.
    pub k: f64,
    /// (k21 + k12) / (eta/2 + 1), signed.
    pub prefactor: f64,
}

fn rate_constant_direction(
    p: &SkewTParams,
    direction: Direction,
    cfg: &QuadConfig,
) -> Result<f64> {
    let kernel = ConditionalKernel::new(p, direction);
    let eta = p.eta();
    let rho = p.rho();
    let dof_e1 = kernel.dof_e1;
    let dof_e2 = kernel.dof_e2;
    let limit = kernel.cutoff_limit();
    let big_f = kernel.big_f_cond;
    let root_e1 = (eta + 1.0).sqrt();
    let little_f = student_t_pdf(-kernel.lambda_cond * root_e1, dof_e1);
    let lam_term = kernel.lambda_cond * root_e1;

    let integral = numerics::integrate(
        |z| {
            let arg = kernel.a(z) + kernel.b(z);
            let inner = student_t_pdf(arg, dof_e2) * kernel.b(z)
                + student_t_cdf(arg, dof_e2) * little_f * lam_term / big_f;
            student_t_pdf(z, dof_e1) * 0.5 * eta * inner / big_f
        },
        f64::NEG_INFINITY,
        limit,
        cfg,
    )?;

    let ratio = kernel.ratio();
    let arg_limit = kernel.a(limit) + kernel.b(limit);
    let boundary = ((eta + 1.0) / (1.0 - rho * rho)).sqrt()
        * (ratio * kernel.first_order() + 0.5 * eta * (ratio - rho))
        * student_t_pdf(limit, dof_e1)
        * student_t_cdf(arg_limit, dof_e2)
        / big_f;

    Ok((boundary - integral.value) * kernel.tail_cond.c.powf(-2.0 / eta))
}

/// Both rate constants of the u^{2/eta} law.
pub fn rate_constants(p: &SkewTParams, cfg: &QuadConfig) -> Result<RateConstants> {
    let k21 = rate_constant_direction(p, Direction::X2GivenX1, cfg)?;
    let k12 = rate_constant_direction(p, Direction::X1GivenX2, cfg)?;
    let sum = k21 + k12;
    Ok(RateConstants {
        k21,
        k12,
        k: sum.abs(),
        prefactor: sum / (0.5 * p.eta() + 1.0),
    })
}

/// One evaluated point of the rate curve.
#[derive(Debug, Clone, Copy)]
pub struct RateSample {
    pub u: f64,
    pub lambda_u: f64,
    /// Quadrature error of lambda_L(u), already divided by u.
    pub quad_error: f64,
}

/// Empirical log-log regression of |lambda_L(u) - lambda_L| against u.
#[derive(Debug, Clone)]
pub struct RateFitResult {
    pub u_grid: Vec<f64>,
    pub lambda_u: Vec<f64>,
    pub lambda_limit: f64,
    /// Fitted exponent, estimating 2/eta.
    pub slope: f64,
    /// exp(intercept), estimating |prefactor|.
    pub prefactor_hat: f64,
    pub fit: LineFit,
    /// Grid points excluded because the difference sat within 100x the
    /// quadrature error estimate.
    pub excluded: Vec<f64>,
}

/// Strictly increasing geometric grid on [u_lo, u_hi].
pub fn rate_grid(u_lo: f64, u_hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(u_lo > 0.0 && u_lo < u_hi && u_hi <= 0.1) {
        return Err(Error::InvalidParameter(format!(
            "rate grid requires 0 < u_lo < u_hi <= 0.1, got [{u_lo}, {u_hi}]"
        )));
    }
    if points < 4 {
        return Err(Error::InvalidParameter(format!(
            "rate grid requires at least 4 points, got {points}"
        )));
    }
    let log_lo = u_lo.ln();
    let log_hi = u_hi.ln();
    let step = (log_hi - log_lo) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| (log_lo + step * i as f64).exp())
        .collect())
}

/// Evaluate lambda_L(u) on a grid, keeping per-point failures separate so a
/// caller can report partial results.
pub fn sample_rate_curve(
    p: &SkewTParams,
    grid: &[f64],
    cfg: &QuadConfig,
) -> Vec<Result<RateSample>> {
    grid.iter()
        .map(|&u| {
            lambda_of_u_detail(p, u, cfg).map(|(lambda_u, quad_error)| RateSample {
                u,
                lambda_u,
                quad_error,
            })
        })
        .collect()
}

/// Fit the power law on already-evaluated points.
pub fn fit_rate_curve(
    samples: &[RateSample],
    lambda_limit: f64,
    lambda_limit_error: f64,
    abs_tol: f64,
) -> Result<RateFitResult> {
    let mut xs = Vec::with_capacity(samples.len());
    let mut ys = Vec::with_capacity(samples.len());
    let mut excluded = Vec::new();
    for s in samples {
        let diff = s.lambda_u - lambda_limit;
        let resolution = s.quad_error + lambda_limit_error;
        if diff.abs() <= abs_tol {
            return Err(Error::RateBelowResolution {
                u: s.u,
                diff,
                resolution: abs_tol,
            });
        }
        if diff.abs() < 100.0 * resolution {
            excluded.push(s.u);
            continue;
        }
        xs.push(s.u.ln());
        ys.push(diff.abs().ln());
    }
    if xs.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "only {} usable grid points after exclusions",
            xs.len()
        )));
    }
    let fit = numerics::fit_line(&xs, &ys)?;
    Ok(RateFitResult {
        u_grid: samples.iter().map(|s| s.u).collect(),
        lambda_u: samples.iter().map(|s| s.lambda_u).collect(),
        lambda_limit,
        slope: fit.slope,
        prefactor_hat: fit.intercept.exp(),
        fit,
        excluded,
    })
}

/// Evaluate the rate curve on a geometric grid and fit
/// log|lambda_L(u) - lambda_L| against log u.
pub fn fit_rate(
    p: &SkewTParams,
    u_lo: f64,
    u_hi: f64,
    points: usize,
    cfg: &QuadConfig,
) -> Result<RateFitResult> {
    let grid = rate_grid(u_lo, u_hi, points)?;
    let (limit, limit_err) = lambda_limit_with_error(p, cfg)?;
    let samples = sample_rate_curve(p, &grid, cfg)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    fit_rate_curve(&samples, limit, limit_err, cfg.abs_tol)
}

/// Empirical tail dependence estimate from sample pairs.
#[derive(Debug, Clone, Copy)]
pub struct EmpiricalLambda {
    pub value: f64,
    /// Pairs with both coordinates at or below their u-quantiles.
    pub tail_count: usize,
    /// The order statistic rank ceil(n u) used for both thresholds.
    pub order: usize,
    /// False when n*u < 20 and the estimate is too noisy to trust.
    pub reliable: bool,
}

/// Estimator of lambda_L(u) from order statistics: the share of the lowest
/// ceil(n u) observations of each coordinate that coincide.
pub fn empirical_lambda(pairs: &[(f64, f64)], u: f64) -> Result<EmpiricalLambda> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "empirical_lambda requires u in (0,1), got {u}"
        )));
    }
    if pairs.is_empty() {
        return Err(Error::InvalidParameter(
            "empirical_lambda requires at least one pair".to_string(),
        ));
    }
    if pairs.iter().any(|&(a, b)| a.is_nan() || b.is_nan()) {
        return Err(Error::InvalidParameter(
            "sample pairs contain NaN".to_string(),
        ));
    }
    let n = pairs.len();
    let order = ((n as f64 * u).ceil() as usize).clamp(1, n);

    let mut xs: Vec<f64> = pairs.iter().map(|r| r.0).collect();
    let mut ys: Vec<f64> = pairs.iter().map(|r| r.1).collect();
    let (_, q1, _) = xs.select_nth_unstable_by(order - 1, |a, b| a.partial_cmp(b).unwrap());
    let q1 = *q1;
    let (_, q2, _) = ys.select_nth_unstable_by(order - 1, |a, b| a.partial_cmp(b).unwrap());
    let q2 = *q2;

    let tail_count = pairs.iter().filter(|&&(a, b)| a <= q1 && b <= q2).count();
    Ok(EmpiricalLambda {
        value: tail_count as f64 / order as f64,
        tail_count,
        order,
        reliable: n as f64 * u >= 20.0,
    })
}
