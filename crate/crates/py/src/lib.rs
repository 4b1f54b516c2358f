//! Python bindings. Parameters and fits are exposed as small classes;
//! tabular results come back as lists of dicts.

use glme::{
    fit_glme, fit_gmle, fit_lme, fit_mle, fit_ns_glme, fit_ns_lme, gev_cdf, gev_pdf, gev_quantile, gev_sample,
    grid_cells, mann_kendall, ns_return_level, profile_xi, return_level, run_grid, sample_lmoments, CovMethod,
    Design, FitOptions, FitResult, GevParams, GlmeError, LocationFit, Method, NsFitResult, NsOptions, Penalty,
    ProfileMethod, Scenario, SimMethod,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: GlmeError) -> PyErr {
    match e {
        GlmeError::NonConvergence { .. } | GlmeError::Covariance => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn parse_penalty(text: Option<&str>) -> PyResult<Penalty> {
    text.unwrap_or("flat").parse().map_err(to_py)
}

fn cov_method(cov: &str, bootstrap_b: usize) -> PyResult<CovMethod> {
    match cov.to_ascii_lowercase().as_str() {
        "bootstrap" => Ok(CovMethod::Bootstrap { b: bootstrap_b }),
        "exact" => Ok(CovMethod::Exact),
        other => Err(PyValueError::new_err(format!("unknown covariance method '{other}'"))),
    }
}

/// GEV parameters (location, scale, shape); `xi < 0` gives a heavy upper tail.
#[pyclass(name = "GevParams", module = "glme_py", frozen)]
#[derive(Clone)]
struct PyGevParams {
    inner: GevParams,
}

#[pymethods]
impl PyGevParams {
    #[new]
    fn new(mu: f64, sigma: f64, xi: f64) -> PyResult<Self> {
        Ok(PyGevParams { inner: GevParams::new(mu, sigma, xi).map_err(to_py)? })
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma
    }

    #[getter]
    fn xi(&self) -> f64 {
        self.inner.xi
    }

    fn cdf(&self, x: f64) -> PyResult<f64> {
        gev_cdf(&self.inner, x).map_err(to_py)
    }

    fn pdf(&self, x: f64) -> PyResult<f64> {
        gev_pdf(&self.inner, x).map_err(to_py)
    }

    fn quantile(&self, p: f64) -> PyResult<f64> {
        gev_quantile(&self.inner, p).map_err(to_py)
    }

    #[pyo3(signature = (n, seed=42))]
    fn sample(&self, n: usize, seed: u64) -> PyResult<Vec<f64>> {
        gev_sample(&self.inner, n, seed).map_err(to_py)
    }

    fn return_level(&self, period: f64) -> PyResult<f64> {
        return_level(&self.inner, period).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("GevParams(mu={}, sigma={}, xi={})", self.inner.mu, self.inner.sigma, self.inner.xi)
    }
}

/// Result of a stationary fit.
#[pyclass(name = "Fit", module = "glme_py", frozen)]
struct PyFit {
    inner: FitResult,
}

#[pymethods]
impl PyFit {
    #[getter]
    fn params(&self) -> PyGevParams {
        PyGevParams { inner: self.inner.params }
    }

    #[getter]
    fn method(&self) -> String {
        self.inner.method.to_string()
    }

    #[getter]
    fn penalty(&self) -> String {
        self.inner.penalty.to_string()
    }

    #[getter]
    fn objective(&self) -> f64 {
        self.inner.objective_value
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    fn return_level(&self, period: f64) -> PyResult<f64> {
        return_level(&self.inner.params, period).map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(json_err)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner.params;
        format!("Fit(method={}, mu={}, sigma={}, xi={})", self.inner.method, p.mu, p.sigma, p.xi)
    }
}

/// Result of a fit with covariate-dependent location and log-scale.
#[pyclass(name = "NsFit", module = "glme_py", frozen)]
struct PyNsFit {
    inner: NsFitResult,
}

#[pymethods]
impl PyNsFit {
    /// Intercept followed by one slope per covariate.
    #[getter]
    fn mu_coef(&self) -> Vec<f64> {
        self.inner.model.mu_coef.clone()
    }

    /// Log-scale intercept followed by one slope per covariate.
    #[getter]
    fn sigma_coef(&self) -> Vec<f64> {
        self.inner.model.sigma_coef.clone()
    }

    #[getter]
    fn xi(&self) -> f64 {
        self.inner.model.xi
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn objective(&self) -> f64 {
        self.inner.objective_value
    }

    fn params_at(&self, row: usize) -> PyResult<PyGevParams> {
        self.check_row(row)?;
        Ok(PyGevParams { inner: self.inner.model.params_at(row) })
    }

    fn return_level(&self, period: f64, row: usize) -> PyResult<f64> {
        self.check_row(row)?;
        ns_return_level(&self.inner.model, period, row).map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(json_err)
    }
}

impl PyNsFit {
    fn check_row(&self, row: usize) -> PyResult<()> {
        let n = self.inner.model.design.rows();
        if row >= n {
            return Err(PyValueError::new_err(format!("row {row} out of range for {n} rows")));
        }
        Ok(())
    }
}

/// First three sample L-moments `(l1, l2, l3)`.
#[pyfunction]
fn lmoments(x: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    let l = sample_lmoments(&x).map_err(to_py)?;
    let [a, b, c] = l.as_array();
    Ok((a, b, c))
}

/// Fit a stationary GEV by `lme`, `mle`, `gmle` or `glme`.
#[pyfunction]
#[pyo3(signature = (x, method="lme", penalty=None, alpha_n=1.0, cov="bootstrap", bootstrap_b=1000, seed=42))]
#[allow(clippy::too_many_arguments)]
fn fit(
    py: Python<'_>,
    x: Vec<f64>,
    method: &str,
    penalty: Option<&str>,
    alpha_n: f64,
    cov: &str,
    bootstrap_b: usize,
    seed: u64,
) -> PyResult<PyFit> {
    let method: Method = method.parse().map_err(to_py)?;
    let penalty = parse_penalty(penalty)?;
    let opts = FitOptions { alpha_n, cov: cov_method(cov, bootstrap_b)?, seed, ..FitOptions::default() };
    let inner = py
        .allow_threads(|| match method {
            Method::Lme => fit_lme(&x),
            Method::Mle => fit_mle(&x, None, &opts),
            Method::Gmle => fit_gmle(&x, &penalty, &opts),
            Method::Glme => fit_glme(&x, &penalty, &opts),
        })
        .map_err(to_py)?;
    Ok(PyFit { inner })
}

/// Nonstationary fit. `covariates` is a list of columns; when omitted the
/// time index 1..n is used.
#[pyfunction]
#[pyo3(signature = (z, covariates=None, method="lme", penalty=None, alpha_n=1.0, location_fit="tukey", cov_b=1000, seed=42))]
#[allow(clippy::too_many_arguments)]
fn fit_ns(
    py: Python<'_>,
    z: Vec<f64>,
    covariates: Option<Vec<Vec<f64>>>,
    method: &str,
    penalty: Option<&str>,
    alpha_n: f64,
    location_fit: &str,
    cov_b: usize,
    seed: u64,
) -> PyResult<PyNsFit> {
    let design = match covariates {
        Some(cols) => Design::from_columns(&cols).map_err(to_py)?,
        None => Design::time_index(z.len()),
    };
    let location_fit = match location_fit.to_ascii_lowercase().as_str() {
        "tukey" => LocationFit::Tukey,
        "ols" => LocationFit::Ols,
        other => return Err(PyValueError::new_err(format!("unknown location fit '{other}'"))),
    };
    let opts = NsOptions { location_fit, cov_b, alpha_n, seed, ..NsOptions::default() };
    let penalty = parse_penalty(penalty)?;
    let inner = match method.to_ascii_lowercase().as_str() {
        "lme" => py.allow_threads(|| fit_ns_lme(&z, &design, &opts)),
        "glme" => py.allow_threads(|| fit_ns_glme(&z, &design, &penalty, &opts)),
        other => return Err(PyValueError::new_err(format!("unknown nonstationary method '{other}'"))),
    }
    .map_err(to_py)?;
    Ok(PyNsFit { inner })
}

/// Profile over a grid of shape values. `objective` is `likelihood` or
/// `glme`; the penalty defaults to flat. Points where the inner fit fails
/// have `value` set to None.
#[pyfunction]
#[pyo3(signature = (x, grid, objective="likelihood", penalty=None, alpha_n=1.0, cov="bootstrap", bootstrap_b=1000, seed=42))]
#[allow(clippy::too_many_arguments)]
fn profile<'py>(
    py: Python<'py>,
    x: Vec<f64>,
    grid: Vec<f64>,
    objective: &str,
    penalty: Option<&str>,
    alpha_n: f64,
    cov: &str,
    bootstrap_b: usize,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let penalty = parse_penalty(penalty)?;
    let method = match objective.to_ascii_lowercase().as_str() {
        "likelihood" => ProfileMethod::Likelihood(penalty),
        "glme" => ProfileMethod::Glme(penalty),
        other => return Err(PyValueError::new_err(format!("unknown profile objective '{other}'"))),
    };
    let opts = FitOptions { alpha_n, cov: cov_method(cov, bootstrap_b)?, seed, ..FitOptions::default() };
    let points = py.allow_threads(|| profile_xi(&x, &method, &grid, &opts)).map_err(to_py)?;
    points
        .iter()
        .map(|p| {
            let d = PyDict::new(py);
            d.set_item("xi", p.xi)?;
            d.set_item("value", p.value)?;
            d.set_item("mu", p.mu)?;
            d.set_item("sigma", p.sigma)?;
            Ok(d)
        })
        .collect()
}

/// Mann-Kendall trend test against observation order.
#[pyfunction]
fn trend<'py>(py: Python<'py>, x: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let mk = mann_kendall(&x).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("tau", mk.tau)?;
    d.set_item("s", mk.s)?;
    d.set_item("var_s", mk.var_s)?;
    d.set_item("z", mk.z)?;
    d.set_item("p_value", mk.p_value)?;
    d.set_item("n", mk.n)?;
    Ok(d)
}

/// Monte Carlo comparison of 100-year return level estimators. One dict
/// per (xi, n, method) cell.
#[pyfunction]
#[pyo3(signature = (xi, n, methods, scenario="stationary", trials=1000, seed=42, cov_b=500))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    xi: Vec<f64>,
    n: Vec<usize>,
    methods: Vec<String>,
    scenario: &str,
    trials: usize,
    seed: u64,
    cov_b: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let scenario: Scenario = scenario.parse().map_err(to_py)?;
    let methods = methods.iter().map(|m| m.parse::<SimMethod>()).collect::<Result<Vec<_>, _>>().map_err(to_py)?;
    let mut cells = grid_cells(scenario, &xi, &n, &methods, trials, seed);
    for cell in &mut cells {
        cell.cov_b = cov_b;
    }
    let reports = py.allow_threads(|| run_grid(&cells, |_, _| {})).map_err(to_py)?;
    reports
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("scenario", r.scenario.to_string())?;
            d.set_item("xi", r.xi)?;
            d.set_item("n", r.n)?;
            d.set_item("method", r.method.to_string())?;
            d.set_item("bias", r.bias)?;
            d.set_item("se", r.se)?;
            d.set_item("rmse", r.rmse)?;
            d.set_item("n_failures", r.n_failures)?;
            d.set_item("truth", r.truth)?;
            d.set_item("unreliable", r.unreliable)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn glme_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGevParams>()?;
    m.add_class::<PyFit>()?;
    m.add_class::<PyNsFit>()?;
    m.add_function(wrap_pyfunction!(lmoments, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(fit_ns, m)?)?;
    m.add_function(wrap_pyfunction!(profile, m)?)?;
    m.add_function(wrap_pyfunction!(trend, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
