//! The generalized extreme value distribution.
//!
//! Parameterized as in Hosking's L-moment literature:
//!
//! ```text
//! F(x) = exp{ -(1 - xi (x - mu) / sigma)^(1/xi) },   1 - xi (x - mu) / sigma > 0
//! ```
//!
//! so `xi < 0` gives a heavy upper tail and `xi > 0` a bounded one. This is the
//! opposite sign to Coles' book. For `|xi| < XI_EPS` the Gumbel limit is used.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GlmeError, Result};
use crate::XI_EPS;

/// Location, scale and shape of a GEV distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevParams {
    pub mu: f64,
    pub sigma: f64,
    pub xi: f64,
}

impl GevParams {
    pub fn new(mu: f64, sigma: f64, xi: f64) -> Result<Self> {
        let p = GevParams { mu, sigma, xi };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.sigma.is_finite() && self.xi.is_finite()) {
            return Err(GlmeError::input("GEV parameters must be finite"));
        }
        if self.sigma <= 0.0 {
            return Err(GlmeError::input(format!("sigma must be > 0, got {}", self.sigma)));
        }
        Ok(())
    }

    pub(crate) fn is_gumbel(&self) -> bool {
        self.xi.abs() < XI_EPS
    }

    /// Finite endpoints of the support as `(lower, upper)`.
    pub fn support(&self) -> (f64, f64) {
        if self.is_gumbel() {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else if self.xi > 0.0 {
            (f64::NEG_INFINITY, self.mu + self.sigma / self.xi)
        } else {
            (self.mu + self.sigma / self.xi, f64::INFINITY)
        }
    }

    /// `1 - xi (x - mu) / sigma`; positive inside the support.
    #[inline]
    pub(crate) fn base(&self, x: f64) -> f64 {
        1.0 - self.xi * (x - self.mu) / self.sigma
    }
}

/// A return period `T` in years; the reduced variate `y_T = -ln(1 - 1/T)` is
/// always derived from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnSpec {
    period: f64,
}

impl ReturnSpec {
    pub fn new(period: f64) -> Result<Self> {
        if !period.is_finite() || period <= 1.0 {
            return Err(GlmeError::input(format!("return period must be > 1, got {period}")));
        }
        Ok(ReturnSpec { period })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn y_t(&self) -> f64 {
        -(-1.0 / self.period).ln_1p()
    }

    /// Non-exceedance probability `1 - 1/T`.
    pub fn probability(&self) -> f64 {
        1.0 - 1.0 / self.period
    }
}

fn check(params: &GevParams, x: f64) -> Result<()> {
    params.validate()?;
    if !x.is_finite() {
        return Err(GlmeError::input("x must be finite"));
    }
    Ok(())
}

pub fn gev_pdf(params: &GevParams, x: f64) -> Result<f64> {
    check(params, x)?;
    let s = params.sigma;
    if params.is_gumbel() {
        let z = (x - params.mu) / s;
        return Ok((-z - (-z).exp()).exp() / s);
    }
    let y = params.base(x);
    if y <= 0.0 {
        return Ok(0.0);
    }
    let ln_y = y.ln();
    let t = (ln_y / params.xi).exp();
    Ok(((1.0 / params.xi - 1.0) * ln_y - t).exp() / s)
}

pub fn gev_cdf(params: &GevParams, x: f64) -> Result<f64> {
    check(params, x)?;
    if params.is_gumbel() {
        let z = (x - params.mu) / params.sigma;
        return Ok((-(-z).exp()).exp());
    }
    let y = params.base(x);
    if y <= 0.0 {
        // Past the finite endpoint: upper for xi > 0, lower for xi < 0.
        return Ok(if params.xi > 0.0 { 1.0 } else { 0.0 });
    }
    Ok((-(y.ln() / params.xi).exp()).exp())
}

/// Quantile function; the closed-form inverse of [`gev_cdf`].
pub fn gev_quantile(params: &GevParams, p: f64) -> Result<f64> {
    params.validate()?;
    if !(p > 0.0 && p < 1.0) {
        return Err(GlmeError::input(format!("probability must lie in (0, 1), got {p}")));
    }
    Ok(quantile_unchecked(params, p))
}

pub(crate) fn quantile_unchecked(params: &GevParams, p: f64) -> f64 {
    let y = -p.ln();
    if params.is_gumbel() {
        params.mu - params.sigma * y.ln()
    } else {
        // (1 - y^xi) / xi, written with expm1 to stay accurate for small xi.
        params.mu - params.sigma * (params.xi * y.ln()).exp_m1() / params.xi
    }
}

/// Inverse-CDF sampling with a seeded ChaCha generator.
pub fn gev_sample(params: &GevParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    params.validate()?;
    if n == 0 {
        return Err(GlmeError::input("sample size must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_with(params, n, &mut rng))
}

pub(crate) fn sample_with<R: Rng + ?Sized>(params: &GevParams, n: usize, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let u: f64 = rng.sample(Open01);
            quantile_unchecked(params, u)
        })
        .collect()
}

/// The `T`-year return level, i.e. the `1 - 1/T` quantile.
///
/// Written as `mu + (sigma / xi)(1 - y_T^xi)` with `y_T = -ln(1 - 1/T)`, which
/// is the inverse of the CDF above.
pub fn return_level(params: &GevParams, period: f64) -> Result<f64> {
    let spec = ReturnSpec::new(period)?;
    params.validate()?;
    Ok(return_level_at(params, &spec))
}

pub(crate) fn return_level_at(params: &GevParams, spec: &ReturnSpec) -> f64 {
    let y = spec.y_t();
    if params.is_gumbel() {
        params.mu - params.sigma * y.ln()
    } else {
        params.mu - params.sigma * (params.xi * y.ln()).exp_m1() / params.xi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(mu: f64, sigma: f64, xi: f64) -> GevParams {
        GevParams::new(mu, sigma, xi).unwrap()
    }

    #[test]
    fn pdf_at_location_is_inverse_e() {
        let v = gev_pdf(&p(0.0, 1.0, -0.3), 0.0).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn pdf_outside_support_is_zero() {
        // upper endpoint mu + sigma/xi = 5
        let params = p(0.0, 2.0, 0.4);
        assert_eq!(gev_pdf(&params, 5.0).unwrap(), 0.0);
        assert_eq!(gev_pdf(&params, 12.0).unwrap(), 0.0);
        assert!(gev_pdf(&params, 4.9).unwrap() > 0.0);
    }

    #[test]
    fn cdf_at_location_is_inverse_e() {
        for xi in [-0.7, -0.2, 0.0, 1e-8, 0.3, 0.9] {
            let v = gev_cdf(&p(0.0, 1.0, xi), 0.0).unwrap();
            assert!((v - (-1.0f64).exp()).abs() < 1e-15, "xi={xi}");
        }
    }

    #[test]
    fn cdf_clamps_at_endpoints() {
        let params = p(0.0, 1.0, 0.1);
        assert_eq!(gev_cdf(&params, 10.0).unwrap(), 1.0);
        assert_eq!(gev_cdf(&params, 50.0).unwrap(), 1.0);
        let heavy = p(0.0, 1.0, -0.5);
        assert_eq!(gev_cdf(&heavy, -2.0).unwrap(), 0.0);
        assert_eq!(gev_cdf(&heavy, -3.0).unwrap(), 0.0);
    }

    #[test]
    fn quantile_round_trip() {
        for xi in [-0.45, -0.2, 0.0, 0.2, 0.45] {
            let params = p(100.0, 30.0, xi);
            for prob in [0.01, 0.5, 0.99] {
                let x = gev_quantile(&params, prob).unwrap();
                let back = gev_cdf(&params, x).unwrap();
                assert!((back - prob).abs() < 1e-12, "xi={xi} p={prob}: {back}");
            }
        }
    }

    #[test]
    fn quantile_gumbel_median_of_reduced_variate() {
        let params = p(0.0, 1.0, 0.0);
        let q = gev_quantile(&params, (-1.0f64).exp()).unwrap();
        assert!(q.abs() < 1e-15);
    }

    #[test]
    fn quantile_rejects_bad_probability() {
        let params = p(0.0, 1.0, 0.1);
        for bad in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(gev_quantile(&params, bad), Err(GlmeError::Input(_))));
        }
    }

    #[test]
    fn invalid_params_are_input_errors() {
        assert!(GevParams::new(0.0, 0.0, 0.1).is_err());
        assert!(GevParams::new(0.0, -1.0, 0.1).is_err());
        assert!(GevParams::new(f64::NAN, 1.0, 0.1).is_err());
        let bad = GevParams { mu: 0.0, sigma: -1.0, xi: 0.0 };
        assert!(gev_pdf(&bad, 0.0).is_err());
        assert!(gev_pdf(&p(0.0, 1.0, 0.0), f64::INFINITY).is_err());
    }

    #[test]
    fn table_return_levels() {
        // Rounded published parameter sets; 0.5% bands absorb the rounding.
        let cases = [
            ((129.89, 120.70, -0.377), 100.0, 1626.0),
            ((119.17, 102.09, -0.608), 100.0, 2709.0),
            ((116.99, 109.75, -0.453), 200.0, 2546.0),
        ];
        for ((mu, sigma, xi), t, expected) in cases {
            let r = return_level(&p(mu, sigma, xi), t).unwrap();
            assert!(((r - expected) / expected).abs() < 0.005, "{r} vs {expected}");
        }
        let r = gev_quantile(&p(129.89, 120.70, -0.377), 0.99).unwrap();
        assert!(((r - 1626.0) / 1626.0).abs() < 0.005);
    }

    #[test]
    fn gumbel_two_year_level_is_median() {
        let params = p(3.0, 2.0, 0.0);
        let r = return_level(&params, 2.0).unwrap();
        assert!((r - (3.0 - 2.0 * 2f64.ln().ln())).abs() < 1e-12);
    }

    #[test]
    fn return_level_rejects_short_period() {
        let params = p(0.0, 1.0, 0.0);
        assert!(return_level(&params, 1.0).is_err());
        assert!(return_level(&params, 0.5).is_err());
        assert!(ReturnSpec::new(f64::NAN).is_err());
    }

    #[test]
    fn return_level_increasing_in_period() {
        for xi in [-0.6, -0.2, 0.0, 0.3, 0.9] {
            let params = p(10.0, 3.0, xi);
            let mut prev = f64::NEG_INFINITY;
            for t in [1.01, 1.5, 2.0, 5.0, 10.0, 50.0, 100.0, 1000.0, 1e5] {
                let r = return_level(&params, t).unwrap();
                assert!(r > prev, "xi={xi} T={t}");
                prev = r;
            }
        }
    }

    #[test]
    fn pdf_continuous_across_gumbel_threshold() {
        let gumbel = p(0.0, 1.0, 0.0);
        for &xi in &[XI_EPS, -XI_EPS] {
            let near = p(0.0, 1.0, xi);
            for i in 0..=80 {
                let x = -4.0 + 0.1 * i as f64;
                let d = (gev_pdf(&near, x).unwrap() - gev_pdf(&gumbel, x).unwrap()).abs();
                assert!(d < 1e-6, "x={x} d={d}");
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let params = p(100.0, 30.0, -0.2);
        let a = gev_sample(&params, 500, 7).unwrap();
        let b = gev_sample(&params, 500, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, gev_sample(&params, 500, 8).unwrap());
        assert!(gev_sample(&params, 0, 1).is_err());
    }
}
