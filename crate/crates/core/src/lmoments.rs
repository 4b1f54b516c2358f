//! Sample and population L-moments, the covariance of sample L-moments and
//! the generalized L-moment distance.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{GlmeError, Result};
use crate::gev::{sample_with, GevParams};
use crate::XI_EPS;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// First three L-moments `(l1, l2, l3)`, either population or sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LMomentTriple {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl LMomentTriple {
    pub fn new(l1: f64, l2: f64, l3: f64) -> Self {
        LMomentTriple { l1, l2, l3 }
    }

    /// L-skewness `l3 / l2`.
    pub fn tau3(&self) -> f64 {
        self.l3 / self.l2
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.l1, self.l2, self.l3]
    }

    fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.l1, self.l2, self.l3)
    }
}

/// First four L-moments from an ascending sorted slice, via probability
/// weighted moments of the centred data.
fn lmoments_sorted(sorted: &[f64]) -> [f64; 4] {
    let n = sorted.len();
    let nf = n as f64;
    let mean = sorted.iter().sum::<f64>() / nf;
    let (mut b1, mut b2, mut b3) = (0.0, 0.0, 0.0);
    for (i, &x) in sorted.iter().enumerate() {
        let c = x - mean;
        let j = i as f64;
        b1 += j * c;
        b2 += j * (j - 1.0) * c;
        b3 += j * (j - 1.0) * (j - 2.0) * c;
    }
    b1 /= nf * (nf - 1.0);
    if n > 2 {
        b2 /= nf * (nf - 1.0) * (nf - 2.0);
    }
    if n > 3 {
        b3 /= nf * (nf - 1.0) * (nf - 2.0) * (nf - 3.0);
    }
    [
        mean,
        2.0 * b1,
        6.0 * b2 - 6.0 * b1,
        20.0 * b3 - 30.0 * b2 + 12.0 * b1,
    ]
}

fn sorted_finite(x: &[f64], min_len: usize) -> Result<Vec<f64>> {
    if x.len() < min_len {
        return Err(GlmeError::input(format!(
            "need at least {min_len} observations, got {}",
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(GlmeError::input("observations must be finite"));
    }
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    Ok(s)
}

/// Unbiased sample L-moments `l1, l2, l3`.
pub fn sample_lmoments(x: &[f64]) -> Result<LMomentTriple> {
    let s = sorted_finite(x, 3)?;
    let [l1, l2, l3, _] = lmoments_sorted(&s);
    Ok(LMomentTriple { l1, l2, l3 })
}

/// Sample L-moments including `l4`, for diagnostics.
pub fn sample_lmoments4(x: &[f64]) -> Result<(LMomentTriple, f64)> {
    let s = sorted_finite(x, 4)?;
    let [l1, l2, l3, l4] = lmoments_sorted(&s);
    Ok((LMomentTriple { l1, l2, l3 }, l4))
}

/// `ln Γ(1 + xi)`, with a series near zero where `ln_gamma` loses relative
/// accuracy.
fn ln_gamma_1p(xi: f64) -> f64 {
    if xi.abs() < XI_EPS {
        let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
        xi * (-EULER_GAMMA + xi * zeta2 / 2.0)
    } else {
        ln_gamma(1.0 + xi)
    }
}

/// Shape-only factors `(g1, g2, tau3)` of the GEV L-moments:
/// `lambda1 = mu + sigma g1`, `lambda2 = sigma g2`, `lambda3 = tau3 lambda2`.
///
/// Requires `xi > -1`. Uses `expm1` forms so the `xi -> 0` limit is reached
/// without cancellation; at `xi == 0` the Gumbel constants are returned.
pub(crate) fn gev_lmoment_factors(xi: f64) -> (f64, f64, f64) {
    if xi == 0.0 {
        return (EULER_GAMMA, std::f64::consts::LN_2, gumbel_tau3());
    }
    let lg = ln_gamma_1p(xi);
    let g1 = -lg.exp_m1() / xi;
    let g2 = -(-xi * std::f64::consts::LN_2).exp_m1() / xi * lg.exp();
    (g1, g2, gev_tau3(xi))
}

/// Population L-skewness of the GEV; strictly decreasing from 1 (xi -> -1)
/// to -1/3 (xi -> 1).
pub(crate) fn gev_tau3(xi: f64) -> f64 {
    if xi == 0.0 {
        return gumbel_tau3();
    }
    let ln2 = std::f64::consts::LN_2;
    let ln3 = 3f64.ln();
    2.0 * (-xi * ln3).exp_m1() / (-xi * ln2).exp_m1() - 3.0
}

fn gumbel_tau3() -> f64 {
    2.0 * 3f64.ln() / std::f64::consts::LN_2 - 3.0
}

/// Population L-moments of a GEV distribution; they exist for `xi > -1`.
pub fn gev_population_lmoments(params: &GevParams) -> Result<LMomentTriple> {
    params.validate()?;
    if params.xi <= -1.0 {
        return Err(GlmeError::Domain(format!(
            "L-moments of the GEV require xi > -1, got {}",
            params.xi
        )));
    }
    Ok(population_unchecked(params.mu, params.sigma, params.xi))
}

#[inline]
pub(crate) fn population_unchecked(mu: f64, sigma: f64, xi: f64) -> LMomentTriple {
    let (g1, g2, t3) = gev_lmoment_factors(xi);
    let l2 = sigma * g2;
    LMomentTriple { l1: mu + sigma * g1, l2, l3: t3 * l2 }
}

/// L-moments of the standard Gumbel distribution: `(gamma, ln 2, ...)`.
pub fn gumbel_population_lmoments() -> LMomentTriple {
    population_unchecked(0.0, 1.0, 0.0)
}

/// How the covariance of sample L-moments is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovMethod {
    /// Nonparametric bootstrap with `b` resamples.
    Bootstrap { b: usize },
    /// Distribution-free unbiased estimator built from U-statistics of the
    /// probability weighted moments. Falls back to the bootstrap (B = 1000)
    /// when the estimate is not positive definite.
    Exact,
}

impl Default for CovMethod {
    fn default() -> Self {
        CovMethod::Bootstrap { b: 1000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovSource {
    Bootstrap,
    Exact,
    Parametric,
    Regularized,
}

/// Symmetric positive-definite 3x3 covariance of `(l1, l2, l3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovMatrix3 {
    pub entries: [[f64; 3]; 3],
    pub source: CovSource,
}

impl CovMatrix3 {
    /// Wraps a symmetric matrix. Positive definiteness is checked when the
    /// matrix is used.
    pub fn new(entries: [[f64; 3]; 3], source: CovSource) -> Result<Self> {
        for (i, row) in entries.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(GlmeError::input("covariance entries must be finite"));
                }
                let scale = 1.0f64.max(v.abs()).max(entries[j][i].abs());
                if (v - entries[j][i]).abs() > 1e-12 * scale {
                    return Err(GlmeError::input("covariance matrix must be symmetric"));
                }
            }
        }
        Ok(CovMatrix3 { entries, source })
    }

    pub fn identity() -> Self {
        CovMatrix3 {
            entries: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            source: CovSource::Exact,
        }
    }

    fn matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.entries[i][j])
    }

    pub fn trace(&self) -> f64 {
        self.entries[0][0] + self.entries[1][1] + self.entries[2][2]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.matrix()).eigenvalues.min()
    }

    /// Cholesky factor for repeated quadratic-form evaluation.
    pub fn factor(&self) -> Result<CovFactor> {
        let chol = self.matrix().cholesky().ok_or(GlmeError::Covariance)?;
        let l = chol.l();
        let log_det = 2.0 * (0..3).map(|i| l[(i, i)].ln()).sum::<f64>();
        Ok(CovFactor { chol, log_det })
    }

    /// Ridge regularization: when the smallest eigenvalue falls below
    /// `1e-10 * tr/3`, add `1e-8 * tr/3` to the diagonal.
    pub fn regularized(mut self) -> Self {
        let scale = self.trace() / 3.0;
        if self.min_eigenvalue() < 1e-10 * scale {
            let delta = 1e-8 * scale;
            for i in 0..3 {
                self.entries[i][i] += delta;
            }
            self.source = CovSource::Regularized;
        }
        self
    }
}

/// Cholesky factorization of a [`CovMatrix3`].
#[derive(Debug, Clone)]
pub struct CovFactor {
    chol: nalgebra::Cholesky<f64, nalgebra::Const<3>>,
    log_det: f64,
}

impl CovFactor {
    /// `d' V^-1 d`.
    pub fn quad_form(&self, d: [f64; 3]) -> f64 {
        let d = Vector3::from(d);
        let y = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&d)
            .expect("cholesky factor has a positive diagonal");
        y.norm_squared()
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Distance between two triples.
    pub fn distance(&self, lambda: &LMomentTriple, l: &LMomentTriple) -> f64 {
        self.quad_form((lambda.to_vector() - l.to_vector()).into())
    }
}

/// Generalized L-moment distance `(lambda - l)' V^-1 (lambda - l)`.
pub fn gld(lambda: &LMomentTriple, l: &LMomentTriple, v: &CovMatrix3) -> Result<f64> {
    Ok(v.factor()?.distance(lambda, l))
}

/// Covariance of the sample L-moments of `x`.
pub fn lmoment_cov(x: &[f64], method: CovMethod, seed: u64) -> Result<CovMatrix3> {
    let sorted = sorted_finite(x, 10)?;
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(GlmeError::Degenerate("all observations are equal".into()));
    }
    match method {
        CovMethod::Bootstrap { b } => bootstrap_cov(&sorted, b, seed),
        CovMethod::Exact => {
            let v = CovMatrix3 { entries: exact_cov(&sorted), source: CovSource::Exact }.regularized();
            if v.factor().is_ok() {
                Ok(v)
            } else {
                bootstrap_cov(&sorted, 1000, seed)
            }
        }
    }
}

fn finish_cov(triples: &[[f64; 3]], source: CovSource) -> Result<CovMatrix3> {
    let entries = empirical_cov(triples);
    let v = CovMatrix3 { entries, source }.regularized();
    v.factor()?;
    Ok(v)
}

/// Empirical covariance (divisor `k - 1`) of a set of triples.
pub(crate) fn empirical_cov(triples: &[[f64; 3]]) -> [[f64; 3]; 3] {
    let k = triples.len() as f64;
    let mut mean = [0.0; 3];
    for t in triples {
        for i in 0..3 {
            mean[i] += t[i] / k;
        }
    }
    let mut c = [[0.0; 3]; 3];
    for t in triples {
        for i in 0..3 {
            for j in i..3 {
                c[i][j] += (t[i] - mean[i]) * (t[j] - mean[j]);
            }
        }
    }
    for i in 0..3 {
        for j in i..3 {
            c[i][j] /= k - 1.0;
            c[j][i] = c[i][j];
        }
    }
    c
}

fn bootstrap_cov(sorted: &[f64], b: usize, seed: u64) -> Result<CovMatrix3> {
    if b < 2 {
        return Err(GlmeError::input("bootstrap needs at least 2 resamples"));
    }
    let n = sorted.len();
    let triples: Vec<[f64; 3]> = (0..b)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |buf, i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
                for slot in buf.iter_mut() {
                    *slot = sorted[rng.random_range(0..n)];
                }
                buf.sort_by(|a, c| a.total_cmp(c));
                let [l1, l2, l3, _] = lmoments_sorted(buf);
                [l1, l2, l3]
            },
        )
        .collect();
    finish_cov(&triples, CovSource::Bootstrap)
}

/// Covariance of sample L-moments of size-`n` draws from `params`, by
/// parametric simulation with `b` replicates.
pub fn parametric_cov(params: &GevParams, n: usize, b: usize, seed: u64) -> Result<CovMatrix3> {
    params.validate()?;
    if n < 3 || b < 2 {
        return Err(GlmeError::input("parametric covariance needs n >= 3 and b >= 2"));
    }
    let triples: Vec<[f64; 3]> = (0..b)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let mut s = sample_with(params, n, &mut rng);
            s.sort_by(|a, c| a.total_cmp(c));
            let [l1, l2, l3, _] = lmoments_sorted(&s);
            [l1, l2, l3]
        })
        .collect();
    finish_cov(&triples, CovSource::Parametric)
}

fn binom(k: i64, r: usize) -> f64 {
    if k < r as i64 || k < 0 {
        return 0.0;
    }
    (0..r).fold(1.0, |acc, j| acc * (k - j as i64) as f64 / (j + 1) as f64)
}

/// Unbiased estimate of `Cov(l_i, l_j)` for `i, j` in 1..=3.
///
/// The probability weighted moment `b_r` is a U-statistic with kernel
/// `max(X_1..X_{r+1}) / (r+1)`. `b_r b_s` minus the U-statistic of the
/// product kernel over disjoint index sets is unbiased for `Cov(b_r, b_s)`;
/// the L-moment covariance follows by the linear map `l = M b`.
pub(crate) fn exact_cov(sorted: &[f64]) -> [[f64; 3]; 3] {
    let n = sorted.len();
    let mean = sorted.iter().sum::<f64>() / n as f64;
    // Centring leaves Cov(l) unchanged and keeps the products well scaled.
    let x: Vec<f64> = sorted.iter().map(|v| v - mean).collect();

    let b: Vec<f64> = (0..3)
        .map(|r| {
            let denom = n as f64 * binom(n as i64 - 1, r);
            x.iter()
                .enumerate()
                .map(|(i, v)| binom(i as i64, r) * v)
                .sum::<f64>()
                / denom
        })
        .collect();

    let mut cb = [[0.0; 3]; 3];
    for r in 0..3 {
        for s in r..3 {
            // Ordered pairs (A, B): max(A) at position i, max(B) at position j.
            // i < j: C(i-1, r) C(j-2-r, s);  j < i: C(j-1, s) C(i-2-s, r)
            // (positions 1-based; below with 0-based i, j).
            let mut total = 0.0;
            let mut prefix_r = 0.0;
            let mut prefix_s = 0.0;
            for j in 0..n {
                let jj = j as i64;
                total += x[j] * binom(jj - 1 - r as i64, s) * prefix_r;
                total += x[j] * binom(jj - 1 - s as i64, r) * prefix_s;
                prefix_r += x[j] * binom(jj, r);
                prefix_s += x[j] * binom(jj, s);
            }
            let pairs = binom(n as i64, r + 1) * binom(n as i64 - r as i64 - 1, s + 1);
            let theta = total / ((r + 1) as f64 * (s + 1) as f64 * pairs);
            cb[r][s] = b[r] * b[s] - theta;
            cb[s][r] = cb[r][s];
        }
    }

    let m = Matrix3::new(1.0, 0.0, 0.0, -1.0, 2.0, 0.0, 1.0, -6.0, 6.0);
    let cl = m * Matrix3::from_fn(|i, j| cb[i][j]) * m.transpose();
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = 0.5 * (cl[(i, j)] + cl[(j, i)]);
        }
    }
    out
}
