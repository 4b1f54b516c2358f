//! Penalty functions on the GEV shape parameter.
//!
//! A [`Penalty`] is what a caller asks for; the data-adaptive beta family can
//! only be evaluated after an initial shape estimate is known, at which point
//! it is resolved into a [`PenaltySpec`].
//!
//! Text grammar (used by the CLI): `family`, `family:choice` or
//! `family:key=value,...`, e.g. `beta_adaptive:choice=5`,
//! `normal:mu=-0.6,sd=0.1`, `cd:alpha=1,lambda=1`, `beta_fixed:ms`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;

use crate::error::{GlmeError, Result};
use crate::SENTINEL;

/// Upper clip of the adaptive beta support.
pub const ADAPTIVE_UPPER_CAP: f64 = 0.3;
/// Default half-width of the adaptive beta support around the initial estimate.
pub const DEFAULT_C0: f64 = 0.3;

/// `(mu_xi, sd_xi)` for normal-penalty choices 1..=4.
pub const NORMAL_CHOICES: [(f64, f64); 4] = [(-0.5, 0.2), (-0.5, 0.1), (-0.6, 0.2), (-0.6, 0.1)];

/// `(p, c1, c2)` for adaptive-beta choices 1..=6.
pub const ADAPTIVE_CHOICES: [(f64, f64, f64); 6] = [
    (6.0, 10.0, 5.0),
    (6.0, 20.0, 7.0),
    (6.0, 30.0, 9.0),
    (2.0, 10.0, 5.0),
    (2.0, 20.0, 7.0),
    (2.0, 30.0, 9.0),
];

/// Named fixed-beta presets on (-0.5, 0.5).
pub const MARTINS_STEDINGER: (f64, f64) = (6.0, 9.0);
pub const PARK: (f64, f64) = (2.5, 2.5);
pub const CANNON: (f64, f64) = (2.0, 3.3);

/// Hyperparameters of the data-adaptive beta penalty before an initial
/// estimate is available.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveHyper {
    pub p: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// Catalogue row, when built from one.
    pub choice: Option<u8>,
}

impl AdaptiveHyper {
    pub fn from_choice(choice: u8) -> Result<Self> {
        let idx = usize::from(choice)
            .checked_sub(1)
            .filter(|i| *i < ADAPTIVE_CHOICES.len())
            .ok_or_else(|| GlmeError::Penalty(format!("adaptive beta choice must be 1..=6, got {choice}")))?;
        let (p, c1, c2) = ADAPTIVE_CHOICES[idx];
        Ok(AdaptiveHyper { p, c0: DEFAULT_C0, c1, c2, choice: Some(choice) })
    }

    fn validate(&self) -> Result<()> {
        let ok = self.p > 0.0 && self.c0 > 0.0 && self.c1 >= 0.0 && self.c2 >= 0.0;
        if !ok || ![self.p, self.c0, self.c1, self.c2].iter().all(|v| v.is_finite()) {
            return Err(GlmeError::Penalty("adaptive beta needs p, c0 > 0 and c1, c2 >= 0".into()));
        }
        Ok(())
    }
}

/// Adaptive beta penalty bound to an initial estimate `xi_hat`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaAdaptive {
    pub hyper: AdaptiveHyper,
    pub xi_hat: f64,
    pub lower: f64,
    pub upper: f64,
    pub q: f64,
}

impl BetaAdaptive {
    pub fn new(hyper: AdaptiveHyper, xi_hat: f64) -> Result<Self> {
        hyper.validate()?;
        if !xi_hat.is_finite() {
            return Err(GlmeError::Penalty("initial shape estimate must be finite".into()));
        }
        let lower = (-1.0f64).max(xi_hat - hyper.c0);
        let upper = ADAPTIVE_UPPER_CAP.min(xi_hat + hyper.c0);
        if lower >= upper {
            return Err(GlmeError::Penalty(format!(
                "empty adaptive support ({lower}, {upper}) for xi_hat = {xi_hat}"
            )));
        }
        let a = if xi_hat <= 0.0 { (xi_hat.abs() * hyper.c1).min(hyper.c2) } else { 0.0 };
        Ok(BetaAdaptive { hyper, xi_hat, lower, upper, q: hyper.p + a })
    }

    pub fn p(&self) -> f64 {
        self.hyper.p
    }

    /// Mode `L + (p-1)(U-L)/(p+q-2)`; valid when `p, q > 1`.
    pub fn mode(&self) -> f64 {
        self.lower + (self.p() - 1.0) * (self.upper - self.lower) / (self.p() + self.q - 2.0)
    }
}

/// Build the adaptive beta penalty for catalogue row `choice` (1..=6).
pub fn build_beta_adaptive(choice: u8, xi_hat: f64) -> Result<PenaltySpec> {
    Ok(PenaltySpec::BetaAdaptive(BetaAdaptive::new(AdaptiveHyper::from_choice(choice)?, xi_hat)?))
}

/// An evaluable penalty `p(xi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PenaltySpec {
    Flat,
    /// Coles–Dixon exponential penalty.
    Cd { alpha: f64, lambda: f64 },
    /// Beta density on (-0.5, 0.5).
    BetaFixed { p: f64, q: f64 },
    /// One plus a normal density.
    Normal { mean: f64, sd: f64 },
    BetaAdaptive(BetaAdaptive),
}

/// `ln` of a beta(p, q) density rescaled to `(lo, hi)`; `None` outside.
fn ln_beta_density(xi: f64, p: f64, q: f64, lo: f64, hi: f64) -> Option<f64> {
    if !(xi > lo && xi < hi) {
        return None;
    }
    let w = hi - lo;
    Some((p - 1.0) * (xi - lo).ln() + (q - 1.0) * (hi - xi).ln() - ln_beta(p, q) - (p + q - 1.0) * w.ln())
}

fn normal_density(xi: f64, mean: f64, sd: f64) -> f64 {
    let z = (xi - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

pub fn eval_cd(alpha: f64, lambda: f64, xi: f64) -> f64 {
    if xi >= 0.0 {
        1.0
    } else if xi > -1.0 {
        (-lambda * (1.0 / (1.0 + xi) - 1.0).powf(alpha)).exp()
    } else {
        0.0
    }
}

pub fn eval_beta_fixed(p: f64, q: f64, xi: f64) -> f64 {
    ln_beta_density(xi, p, q, -0.5, 0.5).map_or(0.0, f64::exp)
}

pub fn eval_normal(mean: f64, sd: f64, xi: f64) -> f64 {
    1.0 + normal_density(xi, mean, sd)
}

pub fn eval_beta_adaptive(spec: &BetaAdaptive, xi: f64) -> f64 {
    ln_beta_density(xi, spec.p(), spec.q, spec.lower, spec.upper).map_or(0.0, f64::exp)
}

impl PenaltySpec {
    /// `p(xi)`.
    pub fn eval(&self, xi: f64) -> f64 {
        match *self {
            PenaltySpec::Flat => 1.0,
            PenaltySpec::Cd { alpha, lambda } => eval_cd(alpha, lambda, xi),
            PenaltySpec::BetaFixed { p, q } => eval_beta_fixed(p, q, xi),
            PenaltySpec::Normal { mean, sd } => eval_normal(mean, sd, xi),
            PenaltySpec::BetaAdaptive(ref b) => eval_beta_adaptive(b, xi),
        }
    }

    /// `-ln p(xi)`, or [`SENTINEL`] where `p(xi) = 0`.
    pub fn neg_log(&self, xi: f64) -> f64 {
        if xi.is_nan() {
            return SENTINEL;
        }
        let ln_p = match *self {
            PenaltySpec::Flat => Some(0.0),
            PenaltySpec::Cd { alpha, lambda } => {
                if xi >= 0.0 {
                    Some(0.0)
                } else if xi > -1.0 {
                    Some(-lambda * (1.0 / (1.0 + xi) - 1.0).powf(alpha))
                } else {
                    None
                }
            }
            PenaltySpec::BetaFixed { p, q } => ln_beta_density(xi, p, q, -0.5, 0.5),
            PenaltySpec::Normal { mean, sd } => Some(normal_density(xi, mean, sd).ln_1p()),
            PenaltySpec::BetaAdaptive(ref b) => ln_beta_density(xi, b.p(), b.q, b.lower, b.upper),
        };
        match ln_p {
            Some(v) if v.is_finite() => -v,
            _ => SENTINEL,
        }
    }

    /// Open interval on which `p(xi) > 0`.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            PenaltySpec::Flat | PenaltySpec::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            PenaltySpec::Cd { .. } => (-1.0, f64::INFINITY),
            PenaltySpec::BetaFixed { .. } => (-0.5, 0.5),
            PenaltySpec::BetaAdaptive(ref b) => (b.lower, b.upper),
        }
    }

    /// A point well inside the support, used to repair infeasible starts.
    pub fn interior_point(&self) -> f64 {
        match *self {
            PenaltySpec::Flat | PenaltySpec::Cd { .. } => 0.0,
            PenaltySpec::Normal { mean, .. } => mean,
            PenaltySpec::BetaFixed { .. } => 0.0,
            PenaltySpec::BetaAdaptive(ref b) => 0.5 * (b.lower + b.upper),
        }
    }

    pub fn is_flat(&self) -> bool {
        matches!(self, PenaltySpec::Flat)
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            PenaltySpec::Flat => true,
            PenaltySpec::Cd { alpha, lambda } => alpha >= 0.0 && lambda >= 0.0,
            PenaltySpec::BetaFixed { p, q } => p > 0.0 && q > 0.0,
            PenaltySpec::Normal { sd, mean } => sd > 0.0 && mean.is_finite(),
            PenaltySpec::BetaAdaptive(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(GlmeError::Penalty(format!("invalid hyperparameters in {self}")))
        }
    }
}

/// `-ln p(xi)`; see [`PenaltySpec::neg_log`].
pub fn neg_log_penalty(spec: &PenaltySpec, xi: f64) -> f64 {
    spec.neg_log(xi)
}

/// A requested penalty; adaptive ones still need an initial estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Penalty {
    Fixed(PenaltySpec),
    Adaptive(AdaptiveHyper),
}

impl Penalty {
    pub fn flat() -> Self {
        Penalty::Fixed(PenaltySpec::Flat)
    }

    pub fn normal_choice(choice: u8) -> Result<Self> {
        let idx = usize::from(choice)
            .checked_sub(1)
            .filter(|i| *i < NORMAL_CHOICES.len())
            .ok_or_else(|| GlmeError::Penalty(format!("normal choice must be 1..=4, got {choice}")))?;
        let (mean, sd) = NORMAL_CHOICES[idx];
        Ok(Penalty::Fixed(PenaltySpec::Normal { mean, sd }))
    }

    pub fn adaptive_choice(choice: u8) -> Result<Self> {
        Ok(Penalty::Adaptive(AdaptiveHyper::from_choice(choice)?))
    }

    pub fn needs_initial_estimate(&self) -> bool {
        matches!(self, Penalty::Adaptive(_))
    }

    /// Bind to the initial shape estimate (ignored by fixed penalties).
    pub fn resolve(&self, xi_hat: f64) -> Result<PenaltySpec> {
        match *self {
            Penalty::Fixed(spec) => {
                spec.validate()?;
                Ok(spec)
            }
            Penalty::Adaptive(h) => Ok(PenaltySpec::BetaAdaptive(BetaAdaptive::new(h, xi_hat)?)),
        }
    }
}

impl From<PenaltySpec> for Penalty {
    fn from(spec: PenaltySpec) -> Self {
        Penalty::Fixed(spec)
    }
}

impl fmt::Display for PenaltySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            PenaltySpec::Flat => write!(f, "flat"),
            PenaltySpec::Cd { alpha, lambda } => write!(f, "cd:alpha={alpha},lambda={lambda}"),
            PenaltySpec::BetaFixed { p, q } => write!(f, "beta_fixed:p={p},q={q}"),
            PenaltySpec::Normal { mean, sd } => write!(f, "normal:mu={mean},sd={sd}"),
            PenaltySpec::BetaAdaptive(ref b) => {
                write!(f, "beta_adaptive:p={},c0={},c1={},c2={}", b.p(), b.hyper.c0, b.hyper.c1, b.hyper.c2)?;
                write!(f, " (xi_hat={}, L={}, U={}, q={})", b.xi_hat, b.lower, b.upper, b.q)
            }
        }
    }
}

impl fmt::Display for Penalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Penalty::Fixed(spec) => spec.fmt(f),
            Penalty::Adaptive(h) => match h.choice {
                Some(c) if h.c0 == DEFAULT_C0 => write!(f, "beta_adaptive:choice={c}"),
                _ => write!(f, "beta_adaptive:p={},c0={},c1={},c2={}", h.p, h.c0, h.c1, h.c2),
            },
        }
    }
}

fn parse_kv(body: &str) -> Result<Vec<(String, f64)>> {
    body.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| GlmeError::Penalty(format!("expected key=value, got '{kv}'")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| GlmeError::Penalty(format!("'{}' is not a number", v.trim())))?;
            Ok((k.trim().to_ascii_lowercase(), v))
        })
        .collect()
}

fn parse_choice(v: f64) -> Result<u8> {
    if v.fract() != 0.0 || !(1.0..=255.0).contains(&v) {
        return Err(GlmeError::Penalty(format!("choice must be a positive integer, got {v}")));
    }
    Ok(v as u8)
}

impl FromStr for Penalty {
    type Err = GlmeError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (family, body) = s.split_once(':').unwrap_or((s, ""));
        let family = family.trim().to_ascii_lowercase();
        let body = body.trim();

        // Bare numbers and named presets.
        let preset = match body.to_ascii_lowercase().as_str() {
            "ms" | "martins_stedinger" => Some(MARTINS_STEDINGER),
            "park" => Some(PARK),
            "cannon" => Some(CANNON),
            _ => None,
        };
        if !body.is_empty() && !body.contains('=') && preset.is_none() {
            let c = parse_choice(body.parse().map_err(|_| GlmeError::Penalty(format!("bad choice '{body}'")))?)?;
            return match family.as_str() {
                "normal" => Penalty::normal_choice(c),
                "beta_adaptive" | "beta" => Penalty::adaptive_choice(c),
                _ => Err(GlmeError::Penalty(format!("family '{family}' has no numbered choices"))),
            };
        }
        let kv = if preset.is_some() { Vec::new() } else { parse_kv(body)? };
        let get = |key: &str| kv.iter().find(|(k, _)| k == key).map(|(_, v)| *v);
        let check_keys = |allowed: &[&str]| -> Result<()> {
            match kv.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
                Some((k, _)) => Err(GlmeError::Penalty(format!("unknown key '{k}' for {family}"))),
                None => Ok(()),
            }
        };

        let penalty = match family.as_str() {
            "flat" | "none" => {
                check_keys(&[])?;
                Penalty::flat()
            }
            "cd" | "coles_dixon" => {
                check_keys(&["alpha", "lambda"])?;
                Penalty::Fixed(PenaltySpec::Cd {
                    alpha: get("alpha").unwrap_or(1.0),
                    lambda: get("lambda").unwrap_or(1.0),
                })
            }
            "ms" | "martins_stedinger" | "park" | "cannon" if body.is_empty() => {
                let (p, q) = match family.as_str() {
                    "park" => PARK,
                    "cannon" => CANNON,
                    _ => MARTINS_STEDINGER,
                };
                Penalty::Fixed(PenaltySpec::BetaFixed { p, q })
            }
            "beta_fixed" => {
                let (p, q) = match preset {
                    Some(pq) => pq,
                    None => {
                        check_keys(&["p", "q"])?;
                        (get("p").unwrap_or(MARTINS_STEDINGER.0), get("q").unwrap_or(MARTINS_STEDINGER.1))
                    }
                };
                Penalty::Fixed(PenaltySpec::BetaFixed { p, q })
            }
            "normal" => {
                check_keys(&["choice", "mu", "mean", "sd", "sigma"])?;
                if let Some(c) = get("choice") {
                    Penalty::normal_choice(parse_choice(c)?)?
                } else {
                    Penalty::Fixed(PenaltySpec::Normal {
                        mean: get("mu").or(get("mean")).unwrap_or(-0.5),
                        sd: get("sd").or(get("sigma")).unwrap_or(0.2),
                    })
                }
            }
            "beta_adaptive" | "beta" => {
                check_keys(&["choice", "p", "c0", "c1", "c2"])?;
                let mut h = match get("choice") {
                    Some(c) => AdaptiveHyper::from_choice(parse_choice(c)?)?,
                    None => AdaptiveHyper {
                        p: get("p").unwrap_or(6.0),
                        c0: DEFAULT_C0,
                        c1: get("c1").unwrap_or(10.0),
                        c2: get("c2").unwrap_or(5.0),
                        choice: None,
                    },
                };
                if let Some(c0) = get("c0") {
                    h.c0 = c0;
                }
                h.validate()?;
                Penalty::Adaptive(h)
            }
            other => return Err(GlmeError::Penalty(format!("unknown penalty family '{other}'"))),
        };
        if let Penalty::Fixed(spec) = penalty {
            spec.validate()?;
        }
        Ok(penalty)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cd_branches() {
        assert_eq!(eval_cd(1.0, 1.0, 0.2), 1.0);
        assert_eq!(eval_cd(1.0, 1.0, 0.0), 1.0);
        assert_eq!(eval_cd(1.0, 1.0, -1.0), 0.0);
        assert_eq!(eval_cd(1.0, 1.0, -1.3), 0.0);
        assert!((eval_cd(1.0, 1.0, -0.5) - (-1.0f64).exp()).abs() < 1e-15);
        let cd = PenaltySpec::Cd { alpha: 1.0, lambda: 1.0 };
        assert_eq!(cd.neg_log(-1.0), SENTINEL);
        assert!((cd.neg_log(-0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn flat_is_zero() {
        for xi in [-5.0, -0.9, 0.0, 0.4, 3.0] {
            assert_eq!(neg_log_penalty(&PenaltySpec::Flat, xi), 0.0);
        }
    }

    #[test]
    fn normal_peak_and_tails() {
        let n = PenaltySpec::Normal { mean: -0.5, sd: 0.2 };
        let peak = 1.0 + 1.0 / (0.2 * (2.0 * std::f64::consts::PI).sqrt());
        assert!((n.eval(-0.5) - peak).abs() < 1e-12);
        assert!((n.eval(-0.5) - 2.99471).abs() < 1e-5);
        assert!((n.neg_log(-0.5) + 1.09685).abs() < 1e-5);
        assert_eq!(n.eval(1e6), 1.0);
        assert_eq!(n.eval(-1e6), 1.0);
        assert!(n.eval(-0.49) < n.eval(-0.5));
        assert!(n.eval(-0.51) < n.eval(-0.5));
    }

    #[test]
    fn normal_is_pure_attraction() {
        for (mean, sd) in NORMAL_CHOICES {
            let n = PenaltySpec::Normal { mean, sd };
            for i in 0..200 {
                let xi = -3.0 + 0.03 * i as f64;
                assert!(n.eval(xi) >= 1.0);
                assert!(n.neg_log(xi) <= 0.0);
            }
        }
        assert_eq!(Penalty::normal_choice(4).unwrap(), Penalty::Fixed(PenaltySpec::Normal { mean: -0.6, sd: 0.1 }));
    }

    #[test]
    fn beta_fixed_modes() {
        let sym = PenaltySpec::BetaFixed { p: 2.5, q: 2.5 };
        assert!((sym.eval(0.1) - sym.eval(-0.1)).abs() < 1e-14);
        assert!(sym.eval(0.0) > sym.eval(0.01));
        let ms = PenaltySpec::BetaFixed { p: 6.0, q: 9.0 };
        let mode = -0.5 + 5.0 / 13.0;
        assert!(ms.eval(mode) > ms.eval(mode + 1e-4));
        assert!(ms.eval(mode) > ms.eval(mode - 1e-4));
        assert_eq!(ms.eval(-0.5), 0.0);
        assert_eq!(ms.eval(0.6), 0.0);
        assert_eq!(ms.neg_log(0.5), SENTINEL);
    }

    #[test]
    fn adaptive_examples() {
        let PenaltySpec::BetaAdaptive(b) = build_beta_adaptive(5, -0.1).unwrap() else { unreachable!() };
        assert_eq!((b.p(), b.q), (2.0, 4.0));
        assert!((b.lower + 0.4).abs() < 1e-15);
        assert!((b.upper - 0.2).abs() < 1e-15);
        assert!((b.mode() + 0.25).abs() < 1e-15);

        let PenaltySpec::BetaAdaptive(b) = build_beta_adaptive(1, -0.4).unwrap() else { unreachable!() };
        assert_eq!(b.q, 10.0);
        for choice in 1..=6 {
            let PenaltySpec::BetaAdaptive(b) = build_beta_adaptive(choice, 0.2).unwrap() else { unreachable!() };
            assert_eq!(b.q, b.p());
        }
    }

    #[test]
    fn adaptive_bounds_are_clipped() {
        let PenaltySpec::BetaAdaptive(b) = build_beta_adaptive(1, -0.9).unwrap() else { unreachable!() };
        assert_eq!(b.lower, -1.0);
        let PenaltySpec::BetaAdaptive(b) = build_beta_adaptive(1, 0.1).unwrap() else { unreachable!() };
        assert_eq!(b.upper, ADAPTIVE_UPPER_CAP);
        assert!(matches!(build_beta_adaptive(1, 0.7), Err(GlmeError::Penalty(_))));
        assert!(build_beta_adaptive(0, -0.1).is_err());
        assert!(build_beta_adaptive(7, -0.1).is_err());
    }

    #[test]
    fn adaptive_q_monotone_in_choice() {
        for xi_hat in [-0.6, -0.4, -0.25, -0.1, -0.01, 0.0] {
            for base in [1u8, 4] {
                let qs: Vec<f64> = (base..base + 3)
                    .map(|c| match build_beta_adaptive(c, xi_hat).unwrap() {
                        PenaltySpec::BetaAdaptive(b) => b.q,
                        _ => unreachable!(),
                    })
                    .collect();
                assert!(qs[0] <= qs[1] && qs[1] <= qs[2], "{xi_hat}: {qs:?}");
            }
        }
    }

    #[test]
    fn adaptive_mode_left_of_midpoint_for_negative_estimate() {
        for choice in 1..=6 {
            let PenaltySpec::BetaAdaptive(b) = build_beta_adaptive(choice, -0.25).unwrap() else { unreachable!() };
            assert!(b.mode() < 0.5 * (b.lower + b.upper));
        }
    }

    #[test]
    fn grammar() {
        let cases = [
            ("flat", Penalty::flat()),
            ("cd", Penalty::Fixed(PenaltySpec::Cd { alpha: 1.0, lambda: 1.0 })),
            ("cd:alpha=2,lambda=0.5", Penalty::Fixed(PenaltySpec::Cd { alpha: 2.0, lambda: 0.5 })),
            ("normal:mu=-0.6,sd=0.1", Penalty::Fixed(PenaltySpec::Normal { mean: -0.6, sd: 0.1 })),
            ("normal:choice=2", Penalty::normal_choice(2).unwrap()),
            ("normal:3", Penalty::normal_choice(3).unwrap()),
            ("beta_fixed:ms", Penalty::Fixed(PenaltySpec::BetaFixed { p: 6.0, q: 9.0 })),
            ("beta_fixed:cannon", Penalty::Fixed(PenaltySpec::BetaFixed { p: 2.0, q: 3.3 })),
            ("cannon", Penalty::Fixed(PenaltySpec::BetaFixed { p: 2.0, q: 3.3 })),
            ("beta_fixed:p=2.5,q=2.5", Penalty::Fixed(PenaltySpec::BetaFixed { p: 2.5, q: 2.5 })),
            ("beta_adaptive:choice=5", Penalty::adaptive_choice(5).unwrap()),
            ("beta_adaptive:6", Penalty::adaptive_choice(6).unwrap()),
        ];
        for (text, expected) in cases {
            assert_eq!(text.parse::<Penalty>().unwrap(), expected, "{text}");
        }
        let custom: Penalty = "beta_adaptive:choice=2,c0=0.4".parse().unwrap();
        match custom {
            Penalty::Adaptive(h) => assert_eq!((h.p, h.c0, h.c1), (6.0, 0.4, 20.0)),
            _ => panic!(),
        }
        for bad in ["gamma", "cd:alpha", "cd:beta=1", "normal:sd=-1", "beta_adaptive:choice=9", "normal:x"] {
            assert!(bad.parse::<Penalty>().is_err(), "{bad}");
        }
    }

    #[test]
    fn display_round_trips() {
        for text in ["flat", "cd:alpha=1,lambda=1", "beta_fixed:p=6,q=9", "normal:mu=-0.6,sd=0.1", "beta_adaptive:choice=3"] {
            let p: Penalty = text.parse().unwrap();
            assert_eq!(p.to_string(), text);
            assert_eq!(p.to_string().parse::<Penalty>().unwrap(), p);
        }
    }
}
