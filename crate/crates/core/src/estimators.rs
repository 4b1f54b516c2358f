//! Stationary GEV estimators.
//!
//! * LME: match the first three population L-moments to the sample ones.
//! * MLE / GMLE: minimize the (penalized) negative log-likelihood.
//! * GLME: minimize `omega/2 + C(V) + alpha_n * (-ln p(xi))`, the negative log
//!   of a trivariate normal approximation to the sampling distribution of the
//!   L-moments, plus a weighted penalty on the shape.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GlmeError, Result};
use crate::gev::GevParams;
use crate::lmoments::{
    gev_lmoment_factors, gev_tau3, lmoment_cov, population_unchecked, sample_lmoments, CovFactor,
    CovMatrix3, CovMethod, LMomentTriple,
};
use crate::optimize::{minimize, NelderMeadOptions};
use crate::penalties::{Penalty, PenaltySpec};
use crate::{SENTINEL, XI_EPS};

/// Shape box shared by all estimators.
pub const XI_MIN: f64 = -1.0;
pub const XI_MAX: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lme,
    Mle,
    Gmle,
    Glme,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Lme => "lme",
            Method::Mle => "mle",
            Method::Gmle => "gmle",
            Method::Glme => "glme",
        })
    }
}

impl FromStr for Method {
    type Err = GlmeError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lme" => Ok(Method::Lme),
            "mle" => Ok(Method::Mle),
            "gmle" => Ok(Method::Gmle),
            "glme" => Ok(Method::Glme),
            other => Err(GlmeError::input(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Weight of the penalty in the GLME objective.
    pub alpha_n: f64,
    pub cov: CovMethod,
    /// Seeds both the covariance bootstrap and optimizer restarts.
    pub seed: u64,
    pub optimizer: NelderMeadOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            alpha_n: 1.0,
            cov: CovMethod::default(),
            seed: 42,
            optimizer: NelderMeadOptions::default(),
        }
    }
}

impl FitOptions {
    fn nm(&self) -> NelderMeadOptions {
        NelderMeadOptions { seed: self.seed, ..self.optimizer }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: GevParams,
    pub method: Method,
    /// Objective at `params`. For GLME this includes the constant
    /// `1.5 ln(2 pi) + 0.5 ln det V`.
    pub objective_value: f64,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
    pub penalty: PenaltySpec,
    pub alpha_n: f64,
    /// Covariance used by GLME.
    pub cov: Option<CovMatrix3>,
}

fn check_sample(x: &[f64]) -> Result<()> {
    if x.len() < 5 {
        return Err(GlmeError::input(format!("need at least 5 observations, got {}", x.len())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(GlmeError::input("observations must be finite"));
    }
    Ok(())
}

/// Solve `tau3(xi) = t3` on (-1, 1) by safeguarded secant iteration.
/// Returns the root and the iteration count.
pub(crate) fn solve_shape(t3: f64) -> Result<(f64, usize)> {
    const TOL: f64 = 1e-12;
    // tau3 decreases from 1 at xi = -1 to -1/3 at xi = 1.
    let (mut a, mut b) = (XI_MIN + 1e-12, XI_MAX - 1e-12);
    let g = |xi: f64| gev_tau3(xi) - t3;
    let (ga, gb) = (g(a), g(b));
    if !(ga > 0.0) {
        return Err(GlmeError::Domain(format!(
            "sample L-skewness {t3:.6} is at or above 1, the upper bound for xi > -1"
        )));
    }
    if !(gb < 0.0) {
        return Err(GlmeError::Domain(format!(
            "sample L-skewness {t3:.6} is at or below -1/3, the lower bound for xi < 1"
        )));
    }

    // Rational starting value for the shape from the L-skewness.
    let z = 2.0 / (3.0 + t3) - std::f64::consts::LN_2 / 3f64.ln();
    let mut x1 = (7.8590 * z + 2.9554 * z * z).clamp(a, b);
    let mut g1 = g(x1);
    let mut x0 = if x1 + 0.01 < b { x1 + 0.01 } else { x1 - 0.01 };
    let mut g0 = g(x0);

    for iter in 1..=200 {
        if g1.abs() < TOL {
            return Ok((x1, iter));
        }
        if g1 > 0.0 {
            a = x1;
        } else {
            b = x1;
        }
        let secant = if g1 != g0 { x1 - g1 * (x1 - x0) / (g1 - g0) } else { f64::NAN };
        let next = if secant.is_finite() && secant > a && secant < b { secant } else { 0.5 * (a + b) };
        x0 = x1;
        g0 = g1;
        x1 = next;
        g1 = g(x1);
        if b - a < 1e-15 {
            break;
        }
    }
    if g1.abs() < TOL {
        Ok((x1, 200))
    } else {
        Err(GlmeError::NonConvergence { best: vec![x1], objective: g1.abs() })
    }
}

/// Location and scale reproducing `l1, l2` at a fixed shape.
pub(crate) fn location_scale_at(l: &LMomentTriple, xi: f64) -> (f64, f64) {
    let (g1, g2, _) = gev_lmoment_factors(xi);
    let sigma = l.l2 / g2;
    (l.l1 - sigma * g1, sigma)
}

pub(crate) fn lme_from_lmoments(l: &LMomentTriple) -> Result<(GevParams, usize)> {
    if !(l.l2 > 0.0) {
        return Err(GlmeError::Degenerate("sample L-scale is zero".into()));
    }
    let (xi, iters) = solve_shape(l.tau3())?;
    let (mu, sigma) = location_scale_at(l, xi);
    Ok((GevParams { mu, sigma, xi }, iters))
}

/// L-moment estimator.
pub fn fit_lme(x: &[f64]) -> Result<FitResult> {
    check_sample(x)?;
    let l = sample_lmoments(x)?;
    let (params, iterations) = lme_from_lmoments(&l)?;
    Ok(FitResult {
        params,
        method: Method::Lme,
        objective_value: 0.0,
        converged: true,
        iterations,
        evaluations: iterations,
        penalty: PenaltySpec::Flat,
        alpha_n: 0.0,
        cov: None,
    })
}

/// GEV negative log-likelihood; [`SENTINEL`] outside the support or the
/// parameter box.
pub fn gev_nll(x: &[f64], mu: f64, sigma: f64, xi: f64) -> f64 {
    if !(sigma > 0.0) || !(xi > XI_MIN && xi < XI_MAX) || !mu.is_finite() {
        return SENTINEL;
    }
    let n = x.len() as f64;
    let mut total = n * sigma.ln();
    if xi.abs() < XI_EPS {
        for &v in x {
            let z = (v - mu) / sigma;
            total += z + (-z).exp();
        }
    } else {
        let k = 1.0 - 1.0 / xi;
        for &v in x {
            let y = 1.0 - xi * (v - mu) / sigma;
            if y <= 0.0 {
                return SENTINEL;
            }
            let ln_y = y.ln();
            total += k * ln_y + (ln_y / xi).exp();
        }
    }
    if total.is_finite() {
        total
    } else {
        SENTINEL
    }
}

/// Make a likelihood starting point feasible by inflating the scale, falling
/// back to the Gumbel member (whose support is the whole line).
fn feasible_start(x: &[f64], mut p: GevParams) -> GevParams {
    p.xi = p.xi.clamp(XI_MIN + 0.01, XI_MAX - 0.01);
    for _ in 0..60 {
        if gev_nll(x, p.mu, p.sigma, p.xi) < SENTINEL {
            return p;
        }
        p.sigma *= 1.5;
    }
    p.xi = 0.0;
    p
}

fn initial_step(p: &GevParams) -> [f64; 3] {
    [0.1 * p.mu.abs() + 1.0, 0.1 * p.sigma, 0.05]
}

fn penalized_likelihood_fit(
    x: &[f64],
    init: Option<GevParams>,
    penalty: PenaltySpec,
    method: Method,
    opts: &FitOptions,
) -> Result<FitResult> {
    check_sample(x)?;
    let mut start = match init {
        Some(p) => {
            p.validate()?;
            p
        }
        None => fit_lme(x)?.params,
    };
    let (lo, hi) = penalty.support();
    if !(start.xi > lo && start.xi < hi) {
        start.xi = penalty.interior_point();
    }
    let start = feasible_start(x, start);
    let objective = |t: &[f64]| {
        let nll = gev_nll(x, t[0], t[1], t[2]);
        if nll >= SENTINEL {
            SENTINEL
        } else {
            nll + penalty.neg_log(t[2])
        }
    };
    let m = minimize(objective, &[start.mu, start.sigma, start.xi], &initial_step(&start), &opts.nm());
    if !m.converged {
        return Err(GlmeError::NonConvergence { best: m.x, objective: m.f });
    }
    Ok(FitResult {
        params: GevParams { mu: m.x[0], sigma: m.x[1], xi: m.x[2] },
        method,
        objective_value: m.f,
        converged: true,
        iterations: m.iterations,
        evaluations: m.evals,
        penalty,
        alpha_n: if penalty.is_flat() { 0.0 } else { 1.0 },
        cov: None,
    })
}

/// Maximum likelihood by Nelder–Mead from `init` (default: the LME).
pub fn fit_mle(x: &[f64], init: Option<GevParams>, opts: &FitOptions) -> Result<FitResult> {
    penalized_likelihood_fit(x, init, PenaltySpec::Flat, Method::Mle, opts)
}

/// Penalized (generalized) maximum likelihood. Adaptive penalties are bound
/// to the LME shape estimate.
pub fn fit_gmle(x: &[f64], penalty: &Penalty, opts: &FitOptions) -> Result<FitResult> {
    check_sample(x)?;
    let lme = fit_lme(x)?.params;
    let spec = penalty.resolve(lme.xi)?;
    let method = if spec.is_flat() { Method::Mle } else { Method::Gmle };
    let mut r = penalized_likelihood_fit(x, Some(lme), spec, method, opts)?;
    r.method = Method::Gmle;
    Ok(r)
}

/// Sample quantities that stay fixed while the GLME objective is minimized.
#[derive(Debug, Clone)]
pub(crate) struct GlmeProblem {
    pub l: LMomentTriple,
    pub factor: CovFactor,
    pub constant: f64,
    pub penalty: PenaltySpec,
    pub alpha_n: f64,
}

impl GlmeProblem {
    pub fn new(l: LMomentTriple, v: &CovMatrix3, penalty: PenaltySpec, alpha_n: f64) -> Result<Self> {
        let factor = v.factor()?;
        let constant = 1.5 * (2.0 * std::f64::consts::PI).ln() + 0.5 * factor.log_det();
        Ok(GlmeProblem { l, factor, constant, penalty, alpha_n })
    }

    pub fn objective(&self, mu: f64, sigma: f64, xi: f64) -> f64 {
        if !(sigma > 0.0) || !(xi > XI_MIN && xi < XI_MAX) || !mu.is_finite() {
            return SENTINEL;
        }
        let pen = self.penalty.neg_log(xi);
        if pen >= SENTINEL {
            return SENTINEL;
        }
        let lambda = population_unchecked(mu, sigma, xi);
        0.5 * self.factor.distance(&lambda, &self.l) + self.constant + self.alpha_n * pen
    }
}

/// GLME objective `omega/2 + 1.5 ln(2 pi) + 0.5 ln det V + alpha_n (-ln p(xi))`.
pub fn glme_objective(
    x: &[f64],
    v: &CovMatrix3,
    params: &GevParams,
    penalty: &PenaltySpec,
    alpha_n: f64,
) -> Result<f64> {
    let l = sample_lmoments(x)?;
    let problem = GlmeProblem::new(l, v, *penalty, alpha_n)?;
    Ok(problem.objective(params.mu, params.sigma, params.xi))
}

/// Generalized L-moment estimator. Starts from the LME; `V` is estimated
/// once from `x` with `opts.cov`.
pub fn fit_glme(x: &[f64], penalty: &Penalty, opts: &FitOptions) -> Result<FitResult> {
    check_sample(x)?;
    let l = sample_lmoments(x)?;
    let (lme, _) = lme_from_lmoments(&l)?;
    let spec = penalty.resolve(lme.xi)?;
    let v = lmoment_cov(x, opts.cov, opts.seed)?;
    fit_glme_with(&l, lme, spec, &v, opts)
}

pub(crate) fn fit_glme_with(
    l: &LMomentTriple,
    lme: GevParams,
    spec: PenaltySpec,
    v: &CovMatrix3,
    opts: &FitOptions,
) -> Result<FitResult> {
    let problem = GlmeProblem::new(*l, v, spec, opts.alpha_n)?;
    let mut start = lme;
    let (lo, hi) = spec.support();
    if !(start.xi > lo && start.xi < hi) || !(start.xi > XI_MIN && start.xi < XI_MAX) {
        start.xi = spec.interior_point().clamp(XI_MIN + 0.01, XI_MAX - 0.01);
        let (mu, sigma) = location_scale_at(l, start.xi);
        start.mu = mu;
        start.sigma = sigma;
    }
    let m = minimize(
        |t: &[f64]| problem.objective(t[0], t[1], t[2]),
        &[start.mu, start.sigma, start.xi],
        &initial_step(&start),
        &opts.nm(),
    );
    if !m.converged {
        return Err(GlmeError::NonConvergence { best: m.x, objective: m.f });
    }
    Ok(FitResult {
        params: GevParams { mu: m.x[0], sigma: m.x[1], xi: m.x[2] },
        method: Method::Glme,
        objective_value: m.f,
        converged: true,
        iterations: m.iterations,
        evaluations: m.evals,
        penalty: spec,
        alpha_n: opts.alpha_n,
        cov: Some(*v),
    })
}

/// Which objective a profile curve is built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileMethod {
    /// Penalized negative log-likelihood (flat penalty gives the MLE profile).
    Likelihood(Penalty),
    /// GLME objective (flat penalty gives a pure GLD profile).
    Glme(Penalty),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub xi: f64,
    /// Negated minimum of the objective over `(mu, sigma)`; `None` when the
    /// inner optimization failed or `xi` is excluded by the penalty.
    pub value: Option<f64>,
    pub mu: f64,
    pub sigma: f64,
}

/// Profile curve over a grid of shape values: for each `xi`, minimize the
/// objective over `(mu, sigma)` and report its negation, so the curve peaks
/// at the full estimate.
pub fn profile_xi(x: &[f64], method: &ProfileMethod, grid: &[f64], opts: &FitOptions) -> Result<Vec<ProfilePoint>> {
    check_sample(x)?;
    if let Some(bad) = grid.iter().find(|g| !(**g > XI_MIN && **g < XI_MAX)) {
        return Err(GlmeError::input(format!("profile grid value {bad} outside (-1, 1)")));
    }
    let l = sample_lmoments(x)?;
    let (lme, _) = lme_from_lmoments(&l)?;
    let nm = NelderMeadOptions { restarts: 1, ..opts.nm() };

    enum Inner {
        Likelihood(PenaltySpec),
        Glme(GlmeProblem),
    }
    let inner = match method {
        ProfileMethod::Likelihood(p) => Inner::Likelihood(p.resolve(lme.xi)?),
        ProfileMethod::Glme(p) => {
            let spec = p.resolve(lme.xi)?;
            let v = lmoment_cov(x, opts.cov, opts.seed)?;
            Inner::Glme(GlmeProblem::new(l, &v, spec, opts.alpha_n)?)
        }
    };

    Ok(grid
        .iter()
        .map(|&xi| {
            let (mu0, sigma0) = location_scale_at(&l, xi);
            let mut start = GevParams { mu: mu0, sigma: sigma0, xi };
            let f = |t: &[f64]| match &inner {
                Inner::Likelihood(pen) => {
                    let nll = gev_nll(x, t[0], t[1], xi);
                    if nll >= SENTINEL {
                        SENTINEL
                    } else {
                        nll + pen.neg_log(xi)
                    }
                }
                Inner::Glme(problem) => problem.objective(t[0], t[1], xi),
            };
            if matches!(inner, Inner::Likelihood(_)) {
                for _ in 0..60 {
                    if gev_nll(x, start.mu, start.sigma, xi) < SENTINEL {
                        break;
                    }
                    start.sigma *= 1.5;
                }
            }
            let step = initial_step(&start);
            let m = minimize(f, &[start.mu, start.sigma], &step[..2], &nm);
            let ok = m.converged && m.f < SENTINEL;
            ProfilePoint { xi, value: ok.then_some(-m.f), mu: m.x[0], sigma: m.x[1] }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gev::gev_sample;

    #[test]
    fn shape_solver_hits_tolerance() {
        for xi in [-0.95, -0.6, -0.3, -1e-7, 0.0, 1e-7, 0.2, 0.5, 0.9] {
            let (root, _) = solve_shape(gev_tau3(xi)).unwrap();
            assert!((gev_tau3(root) - gev_tau3(xi)).abs() < 1e-12);
            assert!((root - xi).abs() < 1e-9, "{xi} -> {root}");
        }
    }

    #[test]
    fn shape_solver_names_the_bound() {
        match solve_shape(1.2) {
            Err(GlmeError::Domain(msg)) => assert!(msg.contains("upper bound")),
            other => panic!("{other:?}"),
        }
        match solve_shape(-0.5) {
            Err(GlmeError::Domain(msg)) => assert!(msg.contains("-1/3")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lme_recovers_population_moments_exactly() {
        let truth = GevParams::new(100.0, 30.0, -0.2).unwrap();
        let l = population_unchecked(truth.mu, truth.sigma, truth.xi);
        let (p, _) = lme_from_lmoments(&l).unwrap();
        assert!((p.mu - 100.0).abs() < 1e-9);
        assert!((p.sigma - 30.0).abs() < 1e-9);
        assert!((p.xi + 0.2).abs() < 1e-12);
    }

    #[test]
    fn lme_input_errors() {
        assert!(matches!(fit_lme(&[1.0, 2.0, 3.0, 4.0]), Err(GlmeError::Input(_))));
        assert!(matches!(fit_lme(&[3.0; 10]), Err(GlmeError::Degenerate(_))));
        assert!(fit_lme(&[1.0, 2.0, f64::INFINITY, 4.0, 5.0]).is_err());
    }

    #[test]
    fn nll_sentinel_outside_support() {
        let x = [1.0, 2.0, 3.0, 10.0, 4.0];
        // Upper endpoint mu + sigma/xi = 0 + 1/0.2 = 5 < 10.
        assert_eq!(gev_nll(&x, 0.0, 1.0, 0.2), SENTINEL);
        assert_eq!(gev_nll(&x, 0.0, -1.0, 0.0), SENTINEL);
        assert_eq!(gev_nll(&x, 0.0, 1.0, -1.0), SENTINEL);
        assert!(gev_nll(&x, 3.0, 3.0, 0.0) < SENTINEL);
    }

    #[test]
    fn mle_descends_from_lme() {
        let truth = GevParams::new(100.0, 30.0, -0.2).unwrap();
        let x = gev_sample(&truth, 80, 5).unwrap();
        let lme = fit_lme(&x).unwrap().params;
        let mle = fit_mle(&x, None, &FitOptions::default()).unwrap();
        assert!(mle.objective_value <= gev_nll(&x, lme.mu, lme.sigma, lme.xi));
    }

    #[test]
    fn glme_objective_floor_at_lme() {
        let truth = GevParams::new(10.0, 3.0, 0.1).unwrap();
        let x = gev_sample(&truth, 60, 1).unwrap();
        let lme = fit_lme(&x).unwrap().params;
        let v = lmoment_cov(&x, CovMethod::Bootstrap { b: 200 }, 3).unwrap();
        let c = 1.5 * (2.0 * std::f64::consts::PI).ln() + 0.5 * v.factor().unwrap().log_det();
        let at_lme = glme_objective(&x, &v, &lme, &PenaltySpec::Flat, 1.0).unwrap();
        assert!((at_lme - c).abs() < 1e-10);
        let off = GevParams { xi: lme.xi + 0.1, ..lme };
        assert!(glme_objective(&x, &v, &off, &PenaltySpec::Flat, 1.0).unwrap() > c);
        let bad = GevParams { xi: -1.0, ..lme };
        assert_eq!(glme_objective(&x, &v, &bad, &PenaltySpec::Flat, 1.0).unwrap(), SENTINEL);
    }

    #[test]
    fn method_names() {
        for m in [Method::Lme, Method::Mle, Method::Gmle, Method::Glme] {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("bayes".parse::<Method>().is_err());
    }
}
