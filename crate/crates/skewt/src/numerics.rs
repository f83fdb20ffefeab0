//! Adaptive quadrature over finite and semi-infinite intervals, monotone
//! root finding, and least-squares line fitting.

use crate::error::{Error, Result};

/// Tolerances and depth limit for every numerical integral and inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_depth: 60,
        }
    }
}

impl QuadConfig {
    /// Tighter tolerances for rate-of-convergence work, where differences of
    /// order u^{2/eta} k must survive subtraction.
    pub fn tail_rate() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_depth: 60,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |t: f64| t.is_nan() || t <= 0.0;
        if bad(self.abs_tol) || bad(self.rel_tol) || self.max_depth < 1 {
            return Err(Error::InvalidParameter(format!(
                "quadrature config requires abs_tol > 0, rel_tol > 0, max_depth >= 1, \
                 got ({}, {}, {})",
                self.abs_tol, self.rel_tol, self.max_depth
            )));
        }
        Ok(())
    }
}

/// Converged integral value with its error estimate and evaluation count.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Ordinary least-squares line through (xs, ys).
#[derive(Debug, Clone, Copy)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub residual_max: f64,
}

// 15-point Kronrod rule with the embedded 7-point Gauss rule (QUADPACK
// dqk15 abscissae and weights). All nodes are interior, so endpoints are
// never evaluated.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

/// One Gauss-Kronrod panel on [a, b]. Returns (value, error estimate).
fn gk15<F>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let mut eval = |x: f64| -> Result<f64> {
        let v = f(x)?;
        if !v.is_finite() {
            return Err(Error::NonFiniteIntegrand { x });
        }
        Ok(v)
    };

    let fc = eval(center)?;
    let mut resk = WGK[7] * fc;
    let mut resg = WG[3] * fc;
    let mut res_abs = resk.abs();
    let mut fv1 = [0.0_f64; 7];
    let mut fv2 = [0.0_f64; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        let sum = f1 + f2;
        resk += WGK[j] * sum;
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * sum;
        }
    }
    let mean = 0.5 * resk;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = resk * half;
    let err = rescale_error((resk - resg) * half, res_abs * half.abs(), res_asc * half.abs());
    Ok((value, err))
}

struct Accum {
    value: f64,
    error: f64,
    evaluations: usize,
}

/// Breakpoints for a wide finite interval: a geometric ladder anchored at
/// the point nearest zero, so structure on the O(1) scale is never skipped
/// over by panels that are orders of magnitude wider.
fn wide_interval_cuts(a: f64, b: f64) -> Vec<f64> {
    let anchor = 0.0_f64.max(a).min(b);
    let mut cuts = vec![a, b];
    if anchor > a && anchor < b {
        cuts.push(anchor);
    }
    let mut step = 1.0;
    loop {
        let lo = anchor - step;
        let hi = anchor + step;
        let mut added = false;
        if lo > a {
            cuts.push(lo);
            added = true;
        }
        if hi < b {
            cuts.push(hi);
            added = true;
        }
        if !added || step > 1e300 {
            break;
        }
        step *= 2.0;
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    cuts
}

fn adapt_finite<F>(f: &mut F, a: f64, b: f64, budget: f64, cfg: &QuadConfig, acc: &mut Accum) -> Result<()>
where
    F: FnMut(f64) -> Result<f64>,
{
    if b - a <= 16.0 {
        return adapt(f, a, b, budget, 0, cfg, acc);
    }
    let cuts = wide_interval_cuts(a, b);
    let per_segment = budget / (cuts.len() - 1) as f64;
    for pair in cuts.windows(2) {
        adapt(f, pair[0], pair[1], per_segment, 0, cfg, acc)?;
    }
    Ok(())
}

fn adapt<F>(
    f: &mut F,
    a: f64,
    b: f64,
    budget: f64,
    depth: u32,
    cfg: &QuadConfig,
    acc: &mut Accum,
) -> Result<()>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (value, err) = gk15(f, a, b)?;
    acc.evaluations += 15;
    if err <= budget || err <= cfg.rel_tol * value.abs() {
        acc.value += value;
        acc.error += err;
        return Ok(());
    }
    if depth >= cfg.max_depth {
        acc.value += value;
        acc.error += err;
        return Ok(());
    }
    // Floor the child budgets: without it, halving outruns the error decay
    // of panels shrinking onto an integrable endpoint singularity. The
    // global tolerance check after accumulation still enforces the contract.
    let mid = 0.5 * (a + b);
    let child = (0.5 * budget).max(cfg.abs_tol * 1e-6);
    adapt(f, a, mid, child, depth + 1, cfg, acc)?;
    adapt(f, mid, b, child, depth + 1, cfg, acc)
}

/// Integrate `f` over (lo, hi) where either endpoint may be infinite.
///
/// Finite panels use the nested Gauss-Kronrod pair with recursive bisection.
/// Infinite endpoints are folded onto a finite interval by the rational
/// substitution x = c + t/(1 - |t|), which keeps polynomially decaying
/// integrands well behaved.
pub fn integrate<F>(mut f: F, lo: f64, hi: f64, cfg: &QuadConfig) -> Result<QuadResult>
where
    F: FnMut(f64) -> f64,
{
    try_integrate(|x| Ok(f(x)), lo, hi, cfg)
}

pub(crate) fn try_integrate<F>(mut f: F, lo: f64, hi: f64, cfg: &QuadConfig) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    cfg.validate()?;
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(Error::InvalidParameter(format!(
            "integration bounds must satisfy lo < hi, got [{lo}, {hi}]"
        )));
    }

    let mut acc = Accum {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };

    match (lo.is_infinite(), hi.is_infinite()) {
        (false, false) => {
            adapt_finite(&mut f, lo, hi, cfg.abs_tol, cfg, &mut acc)?;
        }
        (true, false) => {
            // Anchor the rational map x = c + t/(1+t) at c = min(hi, 0) so
            // mass on the O(1) scale stays resolvable; the remainder [c, hi]
            // is an ordinary finite integral.
            let c = hi.min(0.0);
            let budget = if hi > c { 0.5 * cfg.abs_tol } else { cfg.abs_tol };
            let mut g = |t: f64| -> Result<f64> {
                let w = 1.0 + t;
                if w <= 0.0 {
                    // A node rounded onto the open endpoint; the mapped
                    // integrand vanishes there for anything integrable.
                    return Ok(0.0);
                }
                f(c + t / w).map(|v| v / (w * w))
            };
            adapt(&mut g, -1.0, 0.0, budget, 0, cfg, &mut acc)?;
            if hi > c {
                adapt_finite(&mut f, c, hi, budget, cfg, &mut acc)?;
            }
        }
        (false, true) => {
            // Mirror image: x = c + t/(1-t) anchored at c = max(lo, 0).
            let c = lo.max(0.0);
            let budget = if lo < c { 0.5 * cfg.abs_tol } else { cfg.abs_tol };
            if lo < c {
                adapt_finite(&mut f, lo, c, budget, cfg, &mut acc)?;
            }
            let mut g = |t: f64| -> Result<f64> {
                let w = 1.0 - t;
                if w <= 0.0 {
                    return Ok(0.0);
                }
                f(c + t / w).map(|v| v / (w * w))
            };
            adapt(&mut g, 0.0, 1.0, budget, 0, cfg, &mut acc)?;
        }
        (true, true) => {
            // x = t/(1-|t|), split at t = 0 where the map changes branch.
            let mut g = |t: f64| -> Result<f64> {
                let w = 1.0 - t.abs();
                if w <= 0.0 {
                    return Ok(0.0);
                }
                f(t / w).map(|v| v / (w * w))
            };
            adapt(&mut g, -1.0, 0.0, 0.5 * cfg.abs_tol, 0, cfg, &mut acc)?;
            adapt(&mut g, 0.0, 1.0, 0.5 * cfg.abs_tol, 0, cfg, &mut acc)?;
        }
    }

    let bound = cfg.abs_tol.max(cfg.rel_tol * acc.value.abs());
    if acc.error > bound {
        return Err(Error::ToleranceNotReached {
            estimate: acc.value,
            error_estimate: acc.error,
            evaluations: acc.evaluations,
        });
    }
    Ok(QuadResult {
        value: acc.value,
        error_estimate: acc.error,
        evaluations: acc.evaluations,
    })
}

/// Root of a continuous monotone function on a bracketing interval, found
/// with Brent's method. Terminates when the bracket width drops below
/// xtol * max(1, |x|).
pub fn find_root_monotone<F>(mut g: F, lo: f64, hi: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    try_find_root(|x| Ok(g(x)), lo, hi, xtol)
}

pub(crate) fn try_find_root<F>(mut g: F, lo: f64, hi: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !lo.is_finite() || !hi.is_finite() || lo >= hi || xtol.is_nan() || xtol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "root bracket must be finite with lo < hi and xtol > 0, got [{lo}, {hi}], {xtol}"
        )));
    }
    let mut a = lo;
    let mut b = hi;
    let mut fa = g(a)?;
    let mut fb = g(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoBracket { lo, hi });
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..600 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol * b.abs().max(1.0);
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // Inverse quadratic interpolation, falling back to secant.
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * xm * s, 1.0 - s)
            } else {
                let q = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0)),
                    (q - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 {
            d
        } else {
            tol1.copysign(xm)
        };
        fb = g(b)?;
    }
    Err(Error::ToleranceNotReached {
        estimate: b,
        error_estimate: (c - b).abs(),
        evaluations: 600,
    })
}

/// Ordinary least squares line fit.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 paired points, got {} xs and {} ys",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateFit(
            "all x values are identical".to_string(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    let mut residual_max = 0.0_f64;
    for (&x, &y) in xs.iter().zip(ys) {
        let r = y - (intercept + slope * x);
        ss_res += r * r;
        residual_max = residual_max.max(r.abs());
    }
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
        residual_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{student_t_cdf, student_t_pdf, DegreesOfFreedom};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn integrates_exponential_over_negative_half_line() {
        let cfg = QuadConfig::default();
        let r = integrate(|x| x.exp(), f64::NEG_INFINITY, 0.0, &cfg).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-10);
        assert!(r.error_estimate <= cfg.abs_tol.max(cfg.rel_tol));
        assert!(r.evaluations > 0);
    }

    #[test]
    fn integrates_half_of_cauchy_density() {
        let nu = DegreesOfFreedom::new(1.0).unwrap();
        let cfg = QuadConfig::default();
        let r = integrate(|x| student_t_pdf(x, nu), f64::NEG_INFINITY, 0.0, &cfg).unwrap();
        assert_abs_diff_eq!(r.value, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn integrates_t3_tail_to_closed_form() {
        let nu = DegreesOfFreedom::new(3.0).unwrap();
        let cfg = QuadConfig::default();
        let r = integrate(
            |x| student_t_pdf(x, nu),
            f64::NEG_INFINITY,
            -(3.0_f64).sqrt(),
            &cfg,
        )
        .unwrap();
        assert_abs_diff_eq!(r.value, 0.09084505690810466, epsilon = 1e-11);
    }

    #[test]
    fn rational_substitution_reproduces_gaussian_integral() {
        let cfg = QuadConfig::default();
        let r = integrate(
            |x| (-x * x).exp(),
            f64::NEG_INFINITY,
            f64::INFINITY,
            &cfg,
        )
        .unwrap();
        assert_abs_diff_eq!(r.value, PI.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn rejects_bad_bounds_and_config() {
        let cfg = QuadConfig::default();
        assert!(integrate(|x| x, 1.0, 1.0, &cfg).is_err());
        assert!(integrate(|x| x, 2.0, 1.0, &cfg).is_err());
        assert!(integrate(|x| x, f64::NAN, 1.0, &cfg).is_err());
        let bad = QuadConfig {
            abs_tol: -1.0,
            ..QuadConfig::default()
        };
        assert!(integrate(|x| x, 0.0, 1.0, &bad).is_err());
    }

    #[test]
    fn reports_non_finite_integrand() {
        let cfg = QuadConfig::default();
        let err = integrate(|x| 1.0 / x, -1.0, 1.0, &cfg).unwrap_err();
        match err {
            Error::NonFiniteIntegrand { .. } | Error::ToleranceNotReached { .. } => {}
            other => panic!("unexpected error: {other:?}"),
        }
        let err = integrate(|_| f64::NAN, 0.0, 1.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::NonFiniteIntegrand { .. }));
    }

    #[test]
    fn tolerance_not_reached_carries_best_estimate() {
        let cfg = QuadConfig {
            abs_tol: 1e-300,
            rel_tol: 1e-300,
            max_depth: 2,
        };
        let err = integrate(|x| (10.0 * x).sin() / (1e-3 + x * x), -4.0, 7.0, &cfg).unwrap_err();
        match err {
            Error::ToleranceNotReached {
                estimate,
                error_estimate,
                evaluations,
            } => {
                assert!(estimate.is_finite());
                assert!(error_estimate > 0.0);
                assert!(evaluations >= 15);
            }
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn root_examples() {
        let r = find_root_monotone(|x| x - 2.0, 0.0, 5.0, 1e-12).unwrap();
        assert_abs_diff_eq!(r, 2.0, epsilon = 1e-11);

        let nu = DegreesOfFreedom::new(1.0).unwrap();
        let r = find_root_monotone(|x| student_t_cdf(x, nu) - 0.75, 0.0, 10.0, 1e-12).unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-10);

        let r = find_root_monotone(|x| x * x * x - 2.0, 1.0, 2.0, 1e-13).unwrap();
        assert_relative_eq!(r, 2.0_f64.powf(1.0 / 3.0), max_relative = 1e-12);
    }

    #[test]
    fn root_requires_sign_change() {
        let err = find_root_monotone(|x| x * x + 1.0, 1.0, 2.0, 1e-10).unwrap_err();
        assert!(matches!(err, Error::NoBracket { .. }));
    }

    #[test]
    fn fit_line_examples() {
        let fit = fit_line(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert_abs_diff_eq!(fit.slope, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(fit.intercept, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-14);

        let fit = fit_line(&[0.0, 1.0, 2.0], &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.intercept, 0.0);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn fit_line_recovers_noisy_slope() {
        // y = -0.5 x + 0.7 with +-1e-3 deterministic perturbations.
        let xs: Vec<f64> = (0..40).map(|i| i as f64 * 0.25).collect();
        let ys: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| -0.5 * x + 0.7 + if i % 2 == 0 { 1e-3 } else { -1e-3 })
            .collect();
        let fit = fit_line(&xs, &ys).unwrap();
        assert_abs_diff_eq!(fit.slope, -0.5, epsilon = 1e-2);
        assert!(fit.residual_max <= 2e-3);
    }

    #[test]
    fn fit_line_degenerate_inputs() {
        assert!(fit_line(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]).is_err());
        assert!(fit_line(&[0.0, 1.0], &[0.0, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn additivity_on_smooth_integrands(
            a in -3.0_f64..-0.5,
            b in -0.4_f64..0.4,
            c in 0.5_f64..3.0,
            k in 0.2_f64..2.0,
        ) {
            let cfg = QuadConfig::default();
            let f = |x: f64| (k * x).cos() + 0.1 * x * x;
            let whole = integrate(f, a, c, &cfg).unwrap().value;
            let left = integrate(f, a, b, &cfg).unwrap().value;
            let right = integrate(f, b, c, &cfg).unwrap().value;
            prop_assert!((whole - (left + right)).abs() < 3.0 * cfg.abs_tol.max(1e-12));
        }

        #[test]
        fn linearity(alpha in -2.0_f64..2.0, beta in -2.0_f64..2.0) {
            let cfg = QuadConfig::default();
            let f = |x: f64| (-x * x).exp();
            let g = |x: f64| 1.0 / (1.0 + x * x);
            let combined = integrate(
                |x| alpha * f(x) + beta * g(x),
                f64::NEG_INFINITY,
                f64::INFINITY,
                &cfg,
            ).unwrap().value;
            let separate = alpha
                * integrate(f, f64::NEG_INFINITY, f64::INFINITY, &cfg).unwrap().value
                + beta * integrate(g, f64::NEG_INFINITY, f64::INFINITY, &cfg).unwrap().value;
            prop_assert!((combined - separate).abs() < 1e-8);
        }
    }
}
