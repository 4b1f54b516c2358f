//! Monte Carlo comparison of return-level estimators.
//!
//! Trial `i` of a cell draws its sample from a generator seeded with
//! `base_seed + i`, so every trial is reproducible on its own and results do
//! not depend on how trials are scheduled across threads.

use std::fmt;
use std::str::FromStr;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GlmeError, Result};
use crate::estimators::{fit_glme, fit_lme, fit_mle, FitOptions};
use crate::gev::{quantile_unchecked, return_level, sample_with, GevParams};
use crate::lmoments::CovMethod;
use crate::nonstationary::{fit_ns_glme, fit_ns_lme, ns_return_level, Design, NsModel, NsOptions};
use crate::penalties::Penalty;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Stationary,
    Gev11,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Stationary => "stationary",
            Scenario::Gev11 => "gev11",
        })
    }
}

impl FromStr for Scenario {
    type Err = GlmeError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "stationary" => Ok(Scenario::Stationary),
            "gev11" => Ok(Scenario::Gev11),
            other => Err(GlmeError::input(format!("unknown scenario '{other}'"))),
        }
    }
}

/// Estimator compared in a simulation cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimMethod {
    Lme,
    Mle,
    /// GLME with the normal penalty of the given catalog choice.
    GlmeNormal(u8),
    /// GLME with the data-adaptive beta penalty of the given catalog choice.
    GlmeBeta(u8),
}

impl fmt::Display for SimMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimMethod::Lme => f.write_str("lme"),
            SimMethod::Mle => f.write_str("mle"),
            SimMethod::GlmeNormal(c) => write!(f, "glme.n.c{c}"),
            SimMethod::GlmeBeta(c) => write!(f, "glme.b.c{c}"),
        }
    }
}

impl FromStr for SimMethod {
    type Err = GlmeError;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let method = match t.as_str() {
            "lme" => SimMethod::Lme,
            "mle" => SimMethod::Mle,
            _ => {
                let bad = || GlmeError::input(format!("unknown simulation method '{s}'"));
                let (family, choice) = t
                    .strip_prefix("glme.")
                    .and_then(|rest| rest.split_once(".c"))
                    .ok_or_else(bad)?;
                let choice: u8 = choice.parse().map_err(|_| bad())?;
                match family {
                    "n" => SimMethod::GlmeNormal(choice),
                    "b" => SimMethod::GlmeBeta(choice),
                    _ => return Err(bad()),
                }
            }
        };
        method.penalty()?;
        Ok(method)
    }
}

impl Serialize for SimMethod {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SimMethod {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl SimMethod {
    /// Default pair compared against the LME.
    pub fn defaults() -> Vec<SimMethod> {
        vec![SimMethod::Lme, SimMethod::Mle, SimMethod::GlmeNormal(3), SimMethod::GlmeBeta(1)]
    }

    fn penalty(&self) -> Result<Option<Penalty>> {
        match *self {
            SimMethod::Lme | SimMethod::Mle => Ok(None),
            SimMethod::GlmeNormal(c) => Penalty::normal_choice(c).map(Some),
            SimMethod::GlmeBeta(c) => Penalty::adaptive_choice(c).map(Some),
        }
    }
}

/// One grid point of the study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimCell {
    pub scenario: Scenario,
    pub xi: f64,
    pub n: usize,
    /// Stationary truth (ignored for GEV11).
    pub mu: f64,
    pub sigma: f64,
    /// GEV11 truth `(mu_0, mu_1, sigma_0, sigma_1)` with time `t = 1..=n`.
    pub gev11: [f64; 4],
    pub period: f64,
    pub methods: Vec<SimMethod>,
    pub trials: usize,
    pub base_seed: u64,
    /// Bootstrap replicates for the L-moment covariance inside each trial.
    pub cov_b: usize,
}

impl SimCell {
    pub fn new(scenario: Scenario, xi: f64, n: usize, methods: Vec<SimMethod>, trials: usize, base_seed: u64) -> Self {
        SimCell {
            scenario,
            xi,
            n,
            mu: 100.0,
            sigma: 30.0,
            gev11: [0.0, -0.1, 1.0, 0.02],
            period: 100.0,
            methods,
            trials,
            base_seed,
            cov_b: 500,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(GlmeError::input("a cell needs at least one trial"));
        }
        if self.methods.is_empty() {
            return Err(GlmeError::input("a cell needs at least one method"));
        }
        if self.n < 10 {
            return Err(GlmeError::input("sample size must be at least 10"));
        }
        if !(self.xi > -1.0 && self.xi < 1.0) {
            return Err(GlmeError::Domain(format!("true shape {} outside (-1, 1)", self.xi)));
        }
        if self.cov_b < 2 {
            return Err(GlmeError::input("covariance bootstrap needs at least 2 replicates"));
        }
        if self.scenario == Scenario::Gev11 && self.methods.contains(&SimMethod::Mle) {
            return Err(GlmeError::input("mle is not available for the gev11 scenario"));
        }
        GevParams::new(self.mu, self.sigma, self.xi)?;
        Ok(())
    }

    fn ns_truth(&self) -> NsModel {
        let [m0, m1, s0, s1] = self.gev11;
        NsModel {
            mu_coef: vec![m0, m1],
            sigma_coef: vec![s0, s1],
            xi: self.xi,
            design: Design::time_index(self.n),
        }
    }

    /// Return level of the generating model (end of sample for GEV11).
    pub fn true_return_level(&self) -> Result<f64> {
        match self.scenario {
            Scenario::Stationary => return_level(&GevParams::new(self.mu, self.sigma, self.xi)?, self.period),
            Scenario::Gev11 => ns_return_level(&self.ns_truth(), self.period, self.n - 1),
        }
    }

    fn sample(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self.scenario {
            Scenario::Stationary => sample_with(&GevParams { mu: self.mu, sigma: self.sigma, xi: self.xi }, self.n, &mut rng),
            Scenario::Gev11 => {
                let truth = self.ns_truth();
                (0..self.n).map(|i| quantile_unchecked(&truth.params_at(i), rng.sample(Open01))).collect()
            }
        }
    }

    fn estimate(&self, method: SimMethod, x: &[f64], seed: u64) -> Result<f64> {
        let penalty = method.penalty()?;
        match self.scenario {
            Scenario::Stationary => {
                let opts = FitOptions { cov: CovMethod::Bootstrap { b: self.cov_b }, seed, ..FitOptions::default() };
                let fit = match (method, penalty) {
                    (SimMethod::Lme, _) => fit_lme(x)?,
                    (SimMethod::Mle, _) => fit_mle(x, None, &opts)?,
                    (_, Some(p)) => fit_glme(x, &p, &opts)?,
                    (_, None) => unreachable!("glme methods carry a penalty"),
                };
                if !fit.converged {
                    return Err(GlmeError::NonConvergence { best: vec![], objective: fit.objective_value });
                }
                return_level(&fit.params, self.period)
            }
            Scenario::Gev11 => {
                let design = Design::time_index(self.n);
                let opts = NsOptions { cov_b: self.cov_b, seed, ..NsOptions::default() };
                let fit = match penalty {
                    None => fit_ns_lme(x, &design, &opts)?,
                    Some(p) => fit_ns_glme(x, &design, &p, &opts)?,
                };
                ns_return_level(&fit.model, self.period, self.n - 1)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub bias: f64,
    pub se: f64,
    pub rmse: f64,
}

/// Bias, standard error and root mean squared error with `1/N` divisors.
pub fn metrics(estimates: &[f64], truth: f64) -> Result<Metrics> {
    if estimates.is_empty() {
        return Err(GlmeError::input("no estimates"));
    }
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let se = (estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n).sqrt();
    let rmse = (estimates.iter().map(|e| (e - truth).powi(2)).sum::<f64>() / n).sqrt();
    Ok(Metrics { bias: mean - truth, se, rmse })
}

/// Summary for one (cell, method) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub scenario: Scenario,
    pub xi: f64,
    pub n: usize,
    pub method: SimMethod,
    /// NaN when every trial failed.
    pub bias: f64,
    pub se: f64,
    pub rmse: f64,
    pub n_failures: usize,
    pub trials: usize,
    pub truth: f64,
    /// More than 20% of trials failed.
    pub unreliable: bool,
}

/// Run every trial of `cell` (in parallel) and summarize each method.
pub fn run_cell(cell: &SimCell) -> Result<Vec<SimReport>> {
    cell.validate()?;
    let truth = cell.true_return_level()?;
    let per_trial: Vec<Vec<Option<f64>>> = (0..cell.trials)
        .into_par_iter()
        .map(|i| {
            let seed = cell.base_seed.wrapping_add(i as u64);
            let x = cell.sample(seed);
            cell.methods
                .iter()
                .map(|&m| cell.estimate(m, &x, seed).ok().filter(|r| r.is_finite()))
                .collect()
        })
        .collect();

    let reports = cell
        .methods
        .iter()
        .enumerate()
        .map(|(j, &method)| {
            let ok: Vec<f64> = per_trial.iter().filter_map(|t| t[j]).collect();
            let n_failures = cell.trials - ok.len();
            let m = metrics(&ok, truth).unwrap_or(Metrics { bias: f64::NAN, se: f64::NAN, rmse: f64::NAN });
            SimReport {
                scenario: cell.scenario,
                xi: cell.xi,
                n: cell.n,
                method,
                bias: m.bias,
                se: m.se,
                rmse: m.rmse,
                n_failures,
                trials: cell.trials,
                truth,
                unreliable: 5 * n_failures > cell.trials,
            }
        })
        .collect();
    Ok(reports)
}

/// Default shape grid.
pub const DEFAULT_XIS: [f64; 7] = [-0.45, -0.3, -0.15, 0.0, 0.15, 0.3, 0.45];

/// Default sample sizes for a scenario.
pub fn default_sizes(scenario: Scenario) -> Vec<usize> {
    match scenario {
        Scenario::Stationary => vec![30, 50, 70],
        Scenario::Gev11 => vec![40, 70],
    }
}

/// Cells for the `xis x ns` grid, ordered by shape then sample size.
pub fn grid_cells(
    scenario: Scenario,
    xis: &[f64],
    ns: &[usize],
    methods: &[SimMethod],
    trials: usize,
    base_seed: u64,
) -> Vec<SimCell> {
    xis.iter()
        .flat_map(|&xi| ns.iter().map(move |&n| (xi, n)))
        .map(|(xi, n)| SimCell::new(scenario, xi, n, methods.to_vec(), trials, base_seed))
        .collect()
}

/// Run cells in order; `progress(done, total)` is called after each cell.
pub fn run_grid(cells: &[SimCell], mut progress: impl FnMut(usize, usize)) -> Result<Vec<SimReport>> {
    let mut out = Vec::new();
    for (k, cell) in cells.iter().enumerate() {
        out.extend(run_cell(cell)?);
        progress(k + 1, cells.len());
    }
    Ok(out)
}
