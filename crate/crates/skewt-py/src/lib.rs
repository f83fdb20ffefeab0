//! Python bindings for the skewt library: the model type with its
//! densities, CDF/quantile and sampler, plus the tail-dependence and
//! asymptotic-constant functions.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use skewt::{asymptotics, tail, DegreesOfFreedom, Margin, QuadConfig};

fn to_py_err(e: skewt::Error) -> PyErr {
    match e {
        skewt::Error::InvalidParameter(_)
        | skewt::Error::Domain(_)
        | skewt::Error::MalformedCsv { .. } => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn margin(m: u8) -> PyResult<Margin> {
    Margin::try_from(m).map_err(to_py_err)
}

fn cfg(abs_tol: f64, rel_tol: f64, max_depth: u32) -> PyResult<QuadConfig> {
    let cfg = QuadConfig {
        abs_tol,
        rel_tol,
        max_depth,
    };
    cfg.validate().map_err(to_py_err)?;
    Ok(cfg)
}

fn direction(name: &str) -> PyResult<tail::Direction> {
    match name {
        "2|1" => Ok(tail::Direction::X2GivenX1),
        "1|2" => Ok(tail::Direction::X1GivenX2),
        other => Err(PyValueError::new_err(format!(
            "direction must be '2|1' or '1|2', got '{other}'"
        ))),
    }
}

/// Bivariate skew-t parameters (eta, rho, theta1, theta2).
#[pyclass(name = "SkewTParams", frozen)]
struct PySkewTParams {
    inner: skewt::SkewTParams,
}

#[pymethods]
impl PySkewTParams {
    #[new]
    #[pyo3(signature = (eta, rho=0.0, theta1=0.0, theta2=0.0))]
    fn new(eta: f64, rho: f64, theta1: f64, theta2: f64) -> PyResult<Self> {
        Ok(Self {
            inner: skewt::SkewTParams::new(eta, rho, theta1, theta2).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.inner.eta()
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho()
    }

    #[getter]
    fn theta1(&self) -> f64 {
        self.inner.theta1()
    }

    #[getter]
    fn theta2(&self) -> f64 {
        self.inner.theta2()
    }

    /// (lambda1, lambda2) marginal skewness parameters.
    fn marginal_skewness(&self) -> (f64, f64) {
        let s = self.inner.marginal_skewness();
        (s.lambda1, s.lambda2)
    }

    fn joint_pdf(&self, x1: f64, x2: f64) -> f64 {
        self.inner.joint_pdf(x1, x2)
    }

    fn marginal_pdf(&self, margin_index: u8, x: f64) -> PyResult<f64> {
        Ok(self.inner.marginal_pdf(margin(margin_index)?, x))
    }

    #[pyo3(signature = (margin_index, y, abs_tol=1e-10, rel_tol=1e-8, max_depth=60))]
    fn marginal_cdf(
        &self,
        margin_index: u8,
        y: f64,
        abs_tol: f64,
        rel_tol: f64,
        max_depth: u32,
    ) -> PyResult<f64> {
        self.inner
            .marginal_cdf(margin(margin_index)?, y, &cfg(abs_tol, rel_tol, max_depth)?)
            .map_err(to_py_err)
    }

    #[pyo3(signature = (margin_index, u, abs_tol=1e-10, rel_tol=1e-8, max_depth=60))]
    fn marginal_quantile(
        &self,
        margin_index: u8,
        u: f64,
        abs_tol: f64,
        rel_tol: f64,
        max_depth: u32,
    ) -> PyResult<f64> {
        self.inner
            .marginal_quantile(margin(margin_index)?, u, &cfg(abs_tol, rel_tol, max_depth)?)
            .map_err(to_py_err)
    }

    /// Seeded draws; the same (n, seed) reproduces rows bit-exactly.
    #[pyo3(signature = (n, seed=0))]
    fn sample(&self, n: usize, seed: u64) -> PyResult<Vec<(f64, f64)>> {
        Ok(self
            .inner
            .sample(n, seed)
            .map_err(to_py_err)?
            .rows()
            .to_vec())
    }

    fn __repr__(&self) -> String {
        format!(
            "SkewTParams(eta={}, rho={}, theta1={}, theta2={})",
            self.inner.eta(),
            self.inner.rho(),
            self.inner.theta1(),
            self.inner.theta2()
        )
    }
}

#[pyfunction]
fn log_gamma(x: f64) -> PyResult<f64> {
    skewt::log_gamma(x).map_err(to_py_err)
}

#[pyfunction]
fn student_t_pdf(x: f64, nu: f64) -> PyResult<f64> {
    Ok(skewt::student_t_pdf(
        x,
        DegreesOfFreedom::new(nu).map_err(to_py_err)?,
    ))
}

#[pyfunction]
fn student_t_cdf(x: f64, nu: f64) -> PyResult<f64> {
    Ok(skewt::student_t_cdf(
        x,
        DegreesOfFreedom::new(nu).map_err(to_py_err)?,
    ))
}

#[pyfunction]
fn student_t_quantile(p: f64, nu: f64) -> PyResult<f64> {
    skewt::student_t_quantile(p, DegreesOfFreedom::new(nu).map_err(to_py_err)?)
        .map_err(to_py_err)
}

#[pyfunction]
fn tail_constants<'py>(
    py: Python<'py>,
    params: &PySkewTParams,
    margin_index: u8,
) -> PyResult<Bound<'py, PyDict>> {
    let t = asymptotics::tail_constants(&params.inner, margin(margin_index)?);
    let d = PyDict::new(py);
    d.set_item("c", t.c)?;
    d.set_item("d", t.d)?;
    Ok(d)
}

#[pyfunction]
fn quantile_asymptotic(params: &PySkewTParams, margin_index: u8, u: f64) -> PyResult<f64> {
    asymptotics::quantile_asymptotic(&params.inner, margin(margin_index)?, u).map_err(to_py_err)
}

#[pyfunction]
fn cross_quantile_expansion(params: &PySkewTParams) -> (f64, f64) {
    let e = asymptotics::cross_quantile_expansion(&params.inner);
    (e.ratio, e.first_order)
}

#[pyfunction]
fn integration_limits<'py>(
    py: Python<'py>,
    params: &PySkewTParams,
) -> PyResult<Bound<'py, PyDict>> {
    let l = asymptotics::integration_limits(&params.inner);
    let d = PyDict::new(py);
    d.set_item("a21", l.a21)?;
    d.set_item("a12", l.a12)?;
    d.set_item("L1", l.l1)?;
    d.set_item("L2", l.l2)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (params, abs_tol=1e-10, rel_tol=1e-8, max_depth=60))]
fn lambda_limit(
    params: &PySkewTParams,
    abs_tol: f64,
    rel_tol: f64,
    max_depth: u32,
) -> PyResult<f64> {
    tail::lambda_limit(&params.inner, &cfg(abs_tol, rel_tol, max_depth)?).map_err(to_py_err)
}

#[pyfunction]
#[pyo3(signature = (params, u, abs_tol=1e-10, rel_tol=1e-8, max_depth=60))]
fn lambda_of_u(
    params: &PySkewTParams,
    u: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_depth: u32,
) -> PyResult<f64> {
    tail::lambda_of_u(&params.inner, u, &cfg(abs_tol, rel_tol, max_depth)?).map_err(to_py_err)
}

#[pyfunction]
#[pyo3(signature = (params, y1, y2, abs_tol=1e-10, rel_tol=1e-8, max_depth=60))]
fn joint_tail_probability(
    params: &PySkewTParams,
    y1: f64,
    y2: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_depth: u32,
) -> PyResult<f64> {
    tail::joint_tail_probability(&params.inner, y1, y2, &cfg(abs_tol, rel_tol, max_depth)?)
        .map_err(to_py_err)
}

#[pyfunction]
#[pyo3(signature = (params, direction_name, y, c, abs_tol=1e-10, rel_tol=1e-8, max_depth=60))]
fn conditional_tail_cdf(
    params: &PySkewTParams,
    direction_name: &str,
    y: f64,
    c: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_depth: u32,
) -> PyResult<f64> {
    tail::conditional_tail_cdf(
        &params.inner,
        direction(direction_name)?,
        y,
        c,
        &cfg(abs_tol, rel_tol, max_depth)?,
    )
    .map_err(to_py_err)
}

#[pyfunction]
#[pyo3(signature = (params, u, abs_tol=1e-10, rel_tol=1e-8, max_depth=60))]
fn copula_diag_derivative(
    params: &PySkewTParams,
    u: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_depth: u32,
) -> PyResult<f64> {
    tail::copula_diag_derivative(&params.inner, u, &cfg(abs_tol, rel_tol, max_depth)?)
        .map_err(to_py_err)
}

#[pyfunction]
#[pyo3(signature = (params, abs_tol=1e-10, rel_tol=1e-8, max_depth=60))]
fn rate_constants<'py>(
    py: Python<'py>,
    params: &PySkewTParams,
    abs_tol: f64,
    rel_tol: f64,
    max_depth: u32,
) -> PyResult<Bound<'py, PyDict>> {
    let rc = tail::rate_constants(&params.inner, &cfg(abs_tol, rel_tol, max_depth)?)
        .map_err(to_py_err)?;
    let d = PyDict::new(py);
    d.set_item("k21", rc.k21)?;
    d.set_item("k12", rc.k12)?;
    d.set_item("k", rc.k)?;
    d.set_item("prefactor", rc.prefactor)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (params, u_lo, u_hi, points, abs_tol=1e-12, rel_tol=1e-10, max_depth=60))]
#[allow(clippy::too_many_arguments)]
fn fit_rate<'py>(
    py: Python<'py>,
    params: &PySkewTParams,
    u_lo: f64,
    u_hi: f64,
    points: usize,
    abs_tol: f64,
    rel_tol: f64,
    max_depth: u32,
) -> PyResult<Bound<'py, PyDict>> {
    let fit = tail::fit_rate(
        &params.inner,
        u_lo,
        u_hi,
        points,
        &cfg(abs_tol, rel_tol, max_depth)?,
    )
    .map_err(to_py_err)?;
    let d = PyDict::new(py);
    d.set_item("u_grid", fit.u_grid)?;
    d.set_item("lambda_u", fit.lambda_u)?;
    d.set_item("lambda_limit", fit.lambda_limit)?;
    d.set_item("slope", fit.slope)?;
    d.set_item("prefactor_hat", fit.prefactor_hat)?;
    d.set_item("r_squared", fit.fit.r_squared)?;
    d.set_item("excluded", fit.excluded)?;
    Ok(d)
}

#[pyfunction]
fn empirical_lambda<'py>(
    py: Python<'py>,
    pairs: Vec<(f64, f64)>,
    u: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let est = tail::empirical_lambda(&pairs, u).map_err(to_py_err)?;
    let d = PyDict::new(py);
    d.set_item("value", est.value)?;
    d.set_item("count", est.tail_count)?;
    d.set_item("order", est.order)?;
    d.set_item("reliable", est.reliable)?;
    Ok(d)
}

#[pymodule]
fn skewt_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySkewTParams>()?;
    m.add_function(wrap_pyfunction!(log_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(student_t_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(student_t_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(student_t_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(tail_constants, m)?)?;
    m.add_function(wrap_pyfunction!(quantile_asymptotic, m)?)?;
    m.add_function(wrap_pyfunction!(cross_quantile_expansion, m)?)?;
    m.add_function(wrap_pyfunction!(integration_limits, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_limit, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_of_u, m)?)?;
    m.add_function(wrap_pyfunction!(joint_tail_probability, m)?)?;
    m.add_function(wrap_pyfunction!(conditional_tail_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(copula_diag_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(rate_constants, m)?)?;
    m.add_function(wrap_pyfunction!(fit_rate, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_lambda, m)?)?;
    m.add("GENERATOR_ALGORITHM", skewt::model::GENERATOR_ALGORITHM)?;
    Ok(())
}
