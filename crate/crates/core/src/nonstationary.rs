//! Nonstationary GEV models with
//!
//! ```text
//! mu(X)    = mu_0 + mu_1 X_1 + ... + mu_k X_k
//! sigma(X) = exp(sigma_0 + sigma_1 X_1 + ... + sigma_k X_k)
//! xi       constant
//! ```
//!
//! fitted in four steps: a robust regression of the data on the covariates
//! gives the location slopes; a least-squares regression of the log absolute
//! residuals gives the log-scale slopes; with the slopes held fixed,
//! `(mu_0, sigma_0, xi)` are chosen so that the Gumbel-transformed data have
//! the L-moments of a standard Gumbel (LME), or so that a penalized
//! generalized L-moment distance to those L-moments is minimal (GLME).

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{GlmeError, Result};
use crate::estimators::{lme_from_lmoments, XI_MAX, XI_MIN};
use crate::gev::{return_level_at, GevParams, ReturnSpec};
use crate::lmoments::{
    gumbel_population_lmoments, parametric_cov, sample_lmoments, CovFactor, CovMatrix3,
    LMomentTriple,
};
use crate::optimize::{minimize, NelderMeadOptions};
use crate::penalties::{Penalty, PenaltySpec};
use crate::{SENTINEL, XI_EPS};

/// Row-major `n x k` covariate matrix (no intercept column).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    n: usize,
    k: usize,
    values: Vec<f64>,
}

impl Design {
    /// Build from covariate columns of equal length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let k = columns.len();
        if k == 0 {
            return Err(GlmeError::input("design needs at least one covariate"));
        }
        let n = columns[0].len();
        if columns.iter().any(|c| c.len() != n) {
            return Err(GlmeError::input("covariate columns differ in length"));
        }
        if columns.iter().flatten().any(|v| !v.is_finite()) {
            return Err(GlmeError::input("covariates must be finite"));
        }
        let mut values = Vec::with_capacity(n * k);
        for i in 0..n {
            values.extend(columns.iter().map(|c| c[i]));
        }
        Ok(Design { n, k, values })
    }

    /// Single time covariate `t = 1..=n` (the GEV11 model).
    pub fn time_index(n: usize) -> Self {
        Design { n, k: 1, values: (1..=n).map(|t| t as f64).collect() }
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn covariates(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    fn with_intercept(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.k + 1, |i, j| if j == 0 { 1.0 } else { self.values[i * self.k + j - 1] })
    }

    /// `sum_j coef[j+1] X_ij` for every row (slopes only).
    fn slope_part(&self, coef: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(&coef[1..]).map(|(x, c)| x * c).sum())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NsModel {
    /// `(mu_0, mu_1, ..., mu_k)`
    pub mu_coef: Vec<f64>,
    /// `(sigma_0, sigma_1, ..., sigma_k)` on the log scale.
    pub sigma_coef: Vec<f64>,
    pub xi: f64,
    pub design: Design,
}

impl NsModel {
    pub fn new(mu_coef: Vec<f64>, sigma_coef: Vec<f64>, xi: f64, design: Design) -> Result<Self> {
        let k = design.covariates();
        if mu_coef.len() != k + 1 || sigma_coef.len() != k + 1 {
            return Err(GlmeError::input(format!("expected {} coefficients per parameter", k + 1)));
        }
        if !mu_coef.iter().chain(&sigma_coef).chain([&xi]).all(|v| v.is_finite()) {
            return Err(GlmeError::input("coefficients must be finite"));
        }
        Ok(NsModel { mu_coef, sigma_coef, xi, design })
    }

    fn linear(coef: &[f64], row: &[f64]) -> f64 {
        coef[0] + row.iter().zip(&coef[1..]).map(|(x, c)| x * c).sum::<f64>()
    }

    pub fn mu_at(&self, i: usize) -> f64 {
        Self::linear(&self.mu_coef, self.design.row(i))
    }

    pub fn sigma_at(&self, i: usize) -> f64 {
        Self::linear(&self.sigma_coef, self.design.row(i)).exp()
    }

    /// GEV parameters of observation `i`.
    pub fn params_at(&self, i: usize) -> GevParams {
        GevParams { mu: self.mu_at(i), sigma: self.sigma_at(i), xi: self.xi }
    }
}

/// Location regression used in the first step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocationFit {
    /// Tukey bisquare M-estimator by IRLS.
    #[default]
    Tukey,
    Ols,
}

const TUKEY_C: f64 = 4.685;
const MAD_CONSISTENCY: f64 = 1.482_602_218_505_602;

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// Weighted least squares via SVD; errors when the weighted design is rank
/// deficient.
fn weighted_lstsq(a: &DMatrix<f64>, y: &[f64], w: Option<&[f64]>) -> Result<Vec<f64>> {
    let (n, p) = a.shape();
    let mut aw = a.clone();
    let mut yw = DVector::from_column_slice(y);
    if let Some(w) = w {
        for i in 0..n {
            let s = w[i].sqrt();
            aw.row_mut(i).scale_mut(s);
            yw[i] *= s;
        }
    }
    let svd = aw.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if p > n || !(smax > 0.0) || smin <= 1e-12 * smax {
        return Err(GlmeError::Design);
    }
    let sol = svd.solve(&yw, 0.0).map_err(|_| GlmeError::Design)?;
    Ok(sol.iter().copied().collect())
}

fn residuals(a: &DMatrix<f64>, z: &[f64], coef: &[f64]) -> Vec<f64> {
    let fitted = a * DVector::from_column_slice(coef);
    z.iter().zip(fitted.iter()).map(|(zi, fi)| zi - fi).collect()
}

fn check_response(z: &[f64], design: &Design) -> Result<()> {
    if z.len() != design.rows() {
        return Err(GlmeError::input(format!(
            "{} observations but {} design rows",
            z.len(),
            design.rows()
        )));
    }
    if z.len() <= design.covariates() + 1 {
        return Err(GlmeError::input("need more observations than regression coefficients"));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(GlmeError::input("observations must be finite"));
    }
    Ok(())
}

/// Step 1: regression of `z` on `[1, X]`, returning `(mu_0, ..., mu_k)`.
///
/// The Tukey fit starts from least squares, fixes the scale at the normalized
/// MAD of the least-squares residuals, and iterates reweighted least squares
/// (at most 50 times, stopping on a relative coefficient change below 1e-10).
pub fn robust_location_fit(z: &[f64], design: &Design, method: LocationFit) -> Result<Vec<f64>> {
    check_response(z, design)?;
    let a = design.with_intercept();
    let mut coef = weighted_lstsq(&a, z, None)?;
    if method == LocationFit::Ols {
        return Ok(coef);
    }
    let r = residuals(&a, z, &coef);
    let med = median(&r);
    let dev: Vec<f64> = r.iter().map(|v| (v - med).abs()).collect();
    let scale = MAD_CONSISTENCY * median(&dev);
    let zscale = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(scale > 1e-12 * (1.0 + zscale)) {
        // Least squares already interpolates (most of) the data.
        return Ok(coef);
    }
    for _ in 0..50 {
        let r = residuals(&a, z, &coef);
        let w: Vec<f64> = r
            .iter()
            .map(|ri| {
                let u = ri / (TUKEY_C * scale);
                if u.abs() < 1.0 {
                    (1.0 - u * u).powi(2)
                } else {
                    0.0
                }
            })
            .collect();
        let next = weighted_lstsq(&a, z, Some(&w))?;
        let change = next
            .iter()
            .zip(&coef)
            .map(|(n, o)| (n - o).abs())
            .fold(0.0f64, f64::max);
        let size = coef.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        coef = next;
        if change <= 1e-10 * (1.0 + size) {
            break;
        }
    }
    Ok(coef)
}

/// Steps 2–3: least-squares regression of `ln(|z - mu(X)| + floor)` on
/// `[1, X]`, with `floor = 1e-8 * median(|z - mu(X)|)`. Returns all
/// coefficients; downstream only the slopes are kept.
pub fn scale_regression(z: &[f64], design: &Design, mu_coef: &[f64]) -> Result<Vec<f64>> {
    check_response(z, design)?;
    if mu_coef.len() != design.covariates() + 1 {
        return Err(GlmeError::input("location coefficient count does not match design"));
    }
    let a = design.with_intercept();
    let eps: Vec<f64> = residuals(&a, z, mu_coef).iter().map(|r| r.abs()).collect();
    let mut floor = 1e-8 * median(&eps);
    if floor == 0.0 {
        floor = 1e-8 * eps.iter().sum::<f64>() / eps.len() as f64;
    }
    if floor == 0.0 {
        return Err(GlmeError::Degenerate("all location residuals are zero".into()));
    }
    let y: Vec<f64> = eps.iter().map(|e| (e + floor).ln()).collect();
    weighted_lstsq(&a, &y, None)
}

/// `Z~_i = -(1/xi) ln(1 - xi (z_i - mu(X_i)) / sigma(X_i))`, standard Gumbel
/// under the true model.
pub fn gumbel_transform(z: &[f64], model: &NsModel) -> Result<Vec<f64>> {
    if z.len() != model.design.rows() {
        return Err(GlmeError::input("observation count does not match design"));
    }
    let xi = model.xi;
    z.iter()
        .enumerate()
        .map(|(i, &zi)| {
            let s = (zi - model.mu_at(i)) / model.sigma_at(i);
            if xi.abs() < XI_EPS {
                return Ok(s);
            }
            let y = 1.0 - xi * s;
            if y > 0.0 {
                Ok(-y.ln() / xi)
            } else {
                Err(GlmeError::Support { index: i })
            }
        })
        .collect()
}

/// Distance of the sample L-moments of `ztilde` from the standard Gumbel ones.
pub fn ns_gld(ztilde: &[f64], vtilde: &CovMatrix3) -> Result<f64> {
    let l = sample_lmoments(ztilde)?;
    Ok(vtilde.factor()?.distance(&gumbel_population_lmoments(), &l))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NsOptions {
    pub location_fit: LocationFit,
    /// Extra passes of steps 2–4 with the updated location intercept.
    pub refine_iterations: usize,
    /// Replicates for the Gumbel reference covariance.
    pub cov_b: usize,
    pub alpha_n: f64,
    pub seed: u64,
    pub optimizer: NelderMeadOptions,
}

impl Default for NsOptions {
    fn default() -> Self {
        NsOptions {
            location_fit: LocationFit::Tukey,
            refine_iterations: 0,
            cov_b: 1000,
            alpha_n: 1.0,
            seed: 42,
            optimizer: NelderMeadOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NsDiagnostics {
    /// Step 1 coefficients (intercept first).
    pub location_coef: Vec<f64>,
    /// Step 3 coefficients (intercept first; the intercept is not used).
    pub log_scale_coef: Vec<f64>,
    /// Median absolute pseudo-residual from step 2.
    pub median_abs_residual: f64,
    /// `(mu_0, sigma_0, xi)` the final step started from.
    pub start: [f64; 3],
    /// Euclidean norm of `l~ - lambda_G` at the solution.
    pub residual_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NsFitResult {
    pub model: NsModel,
    pub diagnostics: NsDiagnostics,
    pub objective_value: f64,
    pub converged: bool,
    pub penalty: PenaltySpec,
    pub cov: Option<CovMatrix3>,
}

/// Objective pieces with the slopes fixed.
struct Stage4<'a> {
    z: &'a [f64],
    mu_slope: Vec<f64>,
    log_sigma_slope: Vec<f64>,
}

impl Stage4<'_> {
    fn transformed_lmoments(&self, mu0: f64, sigma0: f64, xi: f64) -> Option<LMomentTriple> {
        if !(xi > XI_MIN && xi < XI_MAX) || !mu0.is_finite() || !sigma0.is_finite() {
            return None;
        }
        let mut t = Vec::with_capacity(self.z.len());
        for (i, &zi) in self.z.iter().enumerate() {
            let s = (zi - mu0 - self.mu_slope[i]) / (sigma0 + self.log_sigma_slope[i]).exp();
            if xi.abs() < XI_EPS {
                t.push(s);
            } else {
                let y = 1.0 - xi * s;
                if !(y > 0.0) {
                    return None;
                }
                t.push(-y.ln() / xi);
            }
        }
        let l = sample_lmoments(&t).ok()?;
        (l.l1.is_finite() && l.l2.is_finite() && l.l3.is_finite()).then_some(l)
    }

    fn residual(&self, theta: &[f64]) -> Option<Vector3<f64>> {
        let l = self.transformed_lmoments(theta[0], theta[1], theta[2])?;
        let g = gumbel_population_lmoments();
        Some(Vector3::new(l.l1 - g.l1, l.l2 - g.l2, l.l3 - g.l3))
    }

    fn sum_sq(&self, theta: &[f64]) -> f64 {
        self.residual(theta).map_or(SENTINEL, |r| r.norm_squared())
    }

    /// Damped Newton iterations on the three moment equations.
    fn polish(&self, theta: &mut [f64; 3]) {
        for _ in 0..30 {
            let Some(r) = self.residual(theta) else { return };
            if r.norm() < 1e-13 {
                return;
            }
            let mut jac = Matrix3::zeros();
            for j in 0..3 {
                let h = 1e-6 * (1.0 + theta[j].abs());
                let (mut up, mut dn) = (*theta, *theta);
                up[j] += h;
                dn[j] -= h;
                let (Some(ru), Some(rd)) = (self.residual(&up), self.residual(&dn)) else { return };
                jac.set_column(j, &((ru - rd) / (2.0 * h)));
            }
            let Some(step) = jac.lu().solve(&r) else { return };
            let mut t = 1.0;
            let current = r.norm();
            let mut improved = false;
            for _ in 0..30 {
                let cand = [theta[0] - t * step[0], theta[1] - t * step[1], theta[2] - t * step[2]];
                if let Some(rc) = self.residual(&cand) {
                    if rc.norm() < current {
                        *theta = cand;
                        improved = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !improved {
                return;
            }
        }
    }
}

struct Slopes {
    location: Vec<f64>,
    log_scale: Vec<f64>,
    median_abs_residual: f64,
}

fn estimate_slopes(z: &[f64], design: &Design, method: LocationFit, mu0_override: Option<f64>) -> Result<Slopes> {
    let mut location = robust_location_fit(z, design, method)?;
    if let Some(m) = mu0_override {
        location[0] = m;
    }
    let log_scale = scale_regression(z, design, &location)?;
    let a = design.with_intercept();
    let eps: Vec<f64> = residuals(&a, z, &location).iter().map(|r| r.abs()).collect();
    Ok(Slopes { location, log_scale, median_abs_residual: median(&eps) })
}

fn fixed_model(slopes: &Slopes, theta: [f64; 3], design: &Design) -> NsModel {
    let mut mu_coef = slopes.location.clone();
    mu_coef[0] = theta[0];
    let mut sigma_coef = slopes.log_scale.clone();
    sigma_coef[0] = theta[1];
    NsModel { mu_coef, sigma_coef, xi: theta[2], design: design.clone() }
}

/// Step 4 with given slopes: returns the moment-matching `(mu_0, sigma_0, xi)`,
/// the start point, and the residual norm.
fn solve_stage4(z: &[f64], design: &Design, slopes: &Slopes, opts: &NsOptions) -> ([f64; 3], [f64; 3], f64) {
    let stage = Stage4 {
        z,
        mu_slope: design.slope_part(&slopes.location),
        log_sigma_slope: design.slope_part(&slopes.log_scale),
    };
    // Detrended data are approximately GEV(mu_0 - mu_0^rob, exp(sigma_0), xi).
    let mu_rob = slopes.location[0];
    let detrended: Vec<f64> = (0..z.len())
        .map(|i| (z[i] - mu_rob - stage.mu_slope[i]) / stage.log_sigma_slope[i].exp())
        .collect();
    let mut start = [mu_rob, slopes.log_scale[0], 0.0];
    if let Some((p, _)) = sample_lmoments(&detrended).ok().and_then(|l| lme_from_lmoments(&l).ok()) {
        let cand = [mu_rob + p.mu, p.sigma.ln(), p.xi];
        if stage.sum_sq(&cand) < SENTINEL {
            start = cand;
        }
    }
    let scale = start[1].exp();
    let step = [0.1 * scale, 0.1, 0.05];
    let nm = NelderMeadOptions { xtol: 1e-10, seed: opts.seed, ..opts.optimizer };
    let m = minimize(|t: &[f64]| stage.sum_sq(t), &start, &step, &nm);
    let mut theta = [m.x[0], m.x[1], m.x[2]];
    stage.polish(&mut theta);
    let norm = stage.residual(&theta).map_or(f64::INFINITY, |r| r.norm());
    (theta, start, norm)
}

/// Nonstationary L-moment estimator (steps 1–4).
pub fn fit_ns_lme(z: &[f64], design: &Design, opts: &NsOptions) -> Result<NsFitResult> {
    check_response(z, design)?;
    let mut slopes = estimate_slopes(z, design, opts.location_fit, None)?;
    let (mut theta, mut start, mut norm) = solve_stage4(z, design, &slopes, opts);
    for _ in 0..opts.refine_iterations {
        slopes = estimate_slopes(z, design, opts.location_fit, Some(theta[0]))?;
        (theta, start, norm) = solve_stage4(z, design, &slopes, opts);
    }
    if !(norm < 1e-8) {
        return Err(GlmeError::NonConvergence { best: theta.to_vec(), objective: norm * norm });
    }
    Ok(NsFitResult {
        model: fixed_model(&slopes, theta, design),
        diagnostics: NsDiagnostics {
            location_coef: slopes.location.clone(),
            log_scale_coef: slopes.log_scale.clone(),
            median_abs_residual: slopes.median_abs_residual,
            start,
            residual_norm: norm,
        },
        objective_value: norm * norm,
        converged: true,
        penalty: PenaltySpec::Flat,
        cov: None,
    })
}

/// Covariance of sample L-moments of `n` standard Gumbel draws.
pub fn gumbel_reference_cov(n: usize, b: usize, seed: u64) -> Result<CovMatrix3> {
    parametric_cov(&GevParams { mu: 0.0, sigma: 1.0, xi: 0.0 }, n, b, seed)
}

/// Nonstationary GLME (steps 1–3, then step 4'): minimize
/// `omega~/2 + C(V~) + alpha_n (-ln p(xi))` over `(mu_0, sigma_0, xi)` with the
/// slopes fixed, starting from the nonstationary LME. `V~` is the covariance
/// of standard Gumbel sample L-moments at this sample size.
pub fn fit_ns_glme(z: &[f64], design: &Design, penalty: &Penalty, opts: &NsOptions) -> Result<NsFitResult> {
    let lme = fit_ns_lme(z, design, opts)?;
    let spec = penalty.resolve(lme.model.xi)?;
    let v = gumbel_reference_cov(z.len(), opts.cov_b, opts.seed)?;
    fit_ns_glme_with(z, lme, spec, &v, opts)
}

pub(crate) fn fit_ns_glme_with(
    z: &[f64],
    lme: NsFitResult,
    spec: PenaltySpec,
    v: &CovMatrix3,
    opts: &NsOptions,
) -> Result<NsFitResult> {
    let design = &lme.model.design;
    let slopes = Slopes {
        location: lme.diagnostics.location_coef.clone(),
        log_scale: lme.diagnostics.log_scale_coef.clone(),
        median_abs_residual: lme.diagnostics.median_abs_residual,
    };
    let stage = Stage4 {
        z,
        mu_slope: design.slope_part(&slopes.location),
        log_sigma_slope: design.slope_part(&slopes.log_scale),
    };
    let factor: CovFactor = v.factor()?;
    let constant = 1.5 * (2.0 * std::f64::consts::PI).ln() + 0.5 * factor.log_det();
    let gumbel = gumbel_population_lmoments();
    let objective = |t: &[f64]| {
        let pen = spec.neg_log(t[2]);
        if pen >= SENTINEL {
            return SENTINEL;
        }
        match stage.transformed_lmoments(t[0], t[1], t[2]) {
            Some(l) => 0.5 * factor.distance(&gumbel, &l) + constant + opts.alpha_n * pen,
            None => SENTINEL,
        }
    };

    let mut start = [lme.model.mu_coef[0], lme.model.sigma_coef[0], lme.model.xi];
    let (lo, hi) = spec.support();
    if !(start[2] > lo && start[2] < hi) || objective(&start) >= SENTINEL {
        start[2] = spec.interior_point().clamp(XI_MIN + 0.01, XI_MAX - 0.01);
        // Re-match location and scale at the new shape.
        let stage_xi = |t: &[f64]| stage.sum_sq(&[t[0], t[1], start[2]]);
        let scale = start[1].exp();
        let m = minimize(stage_xi, &start[..2], &[0.1 * scale, 0.1], &opts.optimizer);
        start[0] = m.x[0];
        start[1] = m.x[1];
    }
    let scale = start[1].exp();
    let nm = NelderMeadOptions { seed: opts.seed, ..opts.optimizer };
    let m = minimize(objective, &start, &[0.1 * scale, 0.1, 0.05], &nm);
    if !m.converged {
        return Err(GlmeError::NonConvergence { best: m.x, objective: m.f });
    }
    let theta = [m.x[0], m.x[1], m.x[2]];
    let norm = stage.residual(&theta).map_or(f64::INFINITY, |r| r.norm());
    Ok(NsFitResult {
        model: fixed_model(&slopes, theta, design),
        diagnostics: NsDiagnostics { start, residual_norm: norm, ..lme.diagnostics },
        objective_value: m.f,
        converged: true,
        penalty: spec,
        cov: Some(*v),
    })
}

/// Conventional `T`-year return level at design row `row` (0-based).
pub fn ns_return_level(model: &NsModel, period: f64, row: usize) -> Result<f64> {
    let spec = ReturnSpec::new(period)?;
    if row >= model.design.rows() {
        return Err(GlmeError::input(format!(
            "row {row} outside design with {} rows",
            model.design.rows()
        )));
    }
    let p = model.params_at(row);
    p.validate()?;
    Ok(return_level_at(&p, &spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gev::quantile_unchecked;
    use rand::distr::Open01;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gev11_sample(n: usize, mu: [f64; 2], sigma: [f64; 2], xi: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (1..=n)
            .map(|t| {
                let t = t as f64;
                let p = GevParams { mu: mu[0] + mu[1] * t, sigma: (sigma[0] + sigma[1] * t).exp(), xi };
                quantile_unchecked(&p, rng.sample(Open01))
            })
            .collect()
    }

    #[test]
    fn noiseless_line_is_recovered() {
        let d = Design::time_index(30);
        let z: Vec<f64> = (1..=30).map(|t| 2.0 + 0.5 * t as f64).collect();
        for method in [LocationFit::Tukey, LocationFit::Ols] {
            let c = robust_location_fit(&z, &d, method).unwrap();
            assert!((c[0] - 2.0).abs() < 1e-12 && (c[1] - 0.5).abs() < 1e-12, "{c:?}");
        }
    }

    #[test]
    fn outlier_resistance() {
        let d = Design::time_index(40);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let clean: Vec<f64> = (1..=40).map(|t| 10.0 + 0.8 * t as f64 + rng.random_range(-1.0..1.0)).collect();
        let truth = robust_location_fit(&clean, &d, LocationFit::Ols).unwrap()[1];
        let mut dirty = clean.clone();
        dirty[39] += 200.0;
        let ols = robust_location_fit(&dirty, &d, LocationFit::Ols).unwrap()[1];
        let rob = robust_location_fit(&dirty, &d, LocationFit::Tukey).unwrap()[1];
        assert!((rob - truth).abs() < (ols - truth).abs());
        assert!((rob - truth).abs() < 0.05);
    }

    #[test]
    fn rank_deficient_design() {
        let d = Design::from_columns(&[vec![1.0; 10]]).unwrap();
        let z: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert_eq!(robust_location_fit(&z, &d, LocationFit::Tukey), Err(GlmeError::Design));
        let d2 = Design::from_columns(&[(0..10).map(|i| i as f64).collect(), (0..10).map(|i| 2.0 * i as f64).collect()]).unwrap();
        assert_eq!(robust_location_fit(&z, &d2, LocationFit::Ols), Err(GlmeError::Design));
    }

    #[test]
    fn too_few_rows() {
        let d = Design::time_index(2);
        assert!(matches!(robust_location_fit(&[1.0, 2.0], &d, LocationFit::Ols), Err(GlmeError::Input(_))));
    }

    #[test]
    fn scale_regression_degenerate() {
        let d = Design::time_index(10);
        let z: Vec<f64> = (1..=10).map(|t| 1.0 + 2.0 * t as f64).collect();
        assert!(matches!(scale_regression(&z, &d, &[1.0, 2.0]), Err(GlmeError::Degenerate(_))));
    }

    #[test]
    fn transform_identity_in_gumbel_limit() {
        let d = Design::time_index(5);
        let m = NsModel::new(vec![0.0, 0.0], vec![0.0, 0.0], 0.0, d).unwrap();
        let z = [-1.0, 0.0, 0.5, 2.0, 7.0];
        assert_eq!(gumbel_transform(&z, &m).unwrap(), z.to_vec());
    }

    #[test]
    fn transform_reports_support_violation() {
        let d = Design::time_index(3);
        let m = NsModel::new(vec![0.0, 0.0], vec![0.0, 0.0], 0.5, d).unwrap();
        // 1 - 0.5 * z <= 0 for z >= 2
        assert_eq!(gumbel_transform(&[0.0, 3.0, 1.0], &m), Err(GlmeError::Support { index: 1 }));
    }

    #[test]
    fn transform_decreasing_in_intercept() {
        let d = Design::time_index(4);
        let z = [1.0, 2.0, 3.0, 4.0];
        let a = gumbel_transform(&z, &NsModel::new(vec![0.0, 0.1], vec![0.5, 0.0], -0.2, d.clone()).unwrap()).unwrap();
        let b = gumbel_transform(&z, &NsModel::new(vec![0.3, 0.1], vec![0.5, 0.0], -0.2, d).unwrap()).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| y < x));
    }

    #[test]
    fn ns_gld_identity_metric() {
        let z = [0.1, 0.7, 1.9, -0.4, 0.3, 2.5];
        let l = sample_lmoments(&z).unwrap();
        let g = gumbel_population_lmoments();
        let expected = (l.l1 - g.l1).powi(2) + (l.l2 - g.l2).powi(2) + (l.l3 - g.l3).powi(2);
        assert!((ns_gld(&z, &CovMatrix3::identity()).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn lme_solves_moment_equations() {
        let z = gev11_sample(60, [0.0, -0.1], [1.0, 0.02], -0.2, 3);
        let d = Design::time_index(60);
        let fit = fit_ns_lme(&z, &d, &NsOptions::default()).unwrap();
        assert!(fit.diagnostics.residual_norm < 1e-8);
        let zt = gumbel_transform(&z, &fit.model).unwrap();
        let l = sample_lmoments(&zt).unwrap();
        let g = gumbel_population_lmoments();
        assert!((l.l1 - g.l1).abs() < 1e-8 && (l.l2 - g.l2).abs() < 1e-8 && (l.l3 - g.l3).abs() < 1e-8);
        // Slopes are exactly the regression outputs.
        assert_eq!(fit.model.mu_coef[1], fit.diagnostics.location_coef[1]);
        assert_eq!(fit.model.sigma_coef[1], fit.diagnostics.log_scale_coef[1]);
    }

    #[test]
    fn return_level_row_checks() {
        let d = Design::time_index(3);
        let m = NsModel::new(vec![1.0, 0.5], vec![0.0, 0.1], -0.1, d).unwrap();
        assert!(ns_return_level(&m, 100.0, 3).is_err());
        assert!(ns_return_level(&m, 1.0, 0).is_err());
        let r = ns_return_level(&m, 100.0, 2).unwrap();
        let direct = crate::gev::return_level(&m.params_at(2), 100.0).unwrap();
        assert_eq!(r, direct);
    }

    #[test]
    fn design_validation() {
        assert!(Design::from_columns(&[]).is_err());
        assert!(Design::from_columns(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(NsModel::new(vec![0.0], vec![0.0, 0.0], 0.0, Design::time_index(3)).is_err());
    }
}
