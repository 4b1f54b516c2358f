//! Mann–Kendall test for a monotone trend against the observation index.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{GlmeError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannKendall {
    /// Kendall's tau-b between the series and its index.
    pub tau: f64,
    /// Two-sided p-value from the continuity-corrected normal approximation.
    pub p_value: f64,
    pub s: f64,
    /// Variance of `s` under no trend, corrected for ties.
    pub var_s: f64,
    pub z: f64,
    pub n: usize,
}

/// Mann–Kendall test of `x` against `1..=n`. Requires `n >= 8`.
pub fn mann_kendall(x: &[f64]) -> Result<MannKendall> {
    let n = x.len();
    if n < 8 {
        return Err(GlmeError::input(format!(
            "Mann-Kendall needs at least 8 observations, got {n}"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(GlmeError::input("observations must be finite"));
    }
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            s += match x[j].partial_cmp(&x[i]) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }

    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut tie_var = 0.0;
    let mut tied_pairs = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_var += t * (t - 1.0) * (2.0 * t + 5.0);
        tied_pairs += t * (t - 1.0) / 2.0;
        i = j;
    }

    let nf = n as f64;
    let pairs = nf * (nf - 1.0) / 2.0;
    let var_s = (nf * (nf - 1.0) * (2.0 * nf + 5.0) - tie_var) / 18.0;
    let sf = s as f64;
    let tau = if pairs > tied_pairs { sf / (pairs * (pairs - tied_pairs)).sqrt() } else { 0.0 };
    let z = if var_s > 0.0 { (sf - sf.signum()) / var_s.sqrt() } else { 0.0 };
    let normal = Normal::standard();
    let p_value = (2.0 * normal.sf(z.abs())).min(1.0);
    Ok(MannKendall { tau, p_value, s: sf, var_s, z, n })
}
