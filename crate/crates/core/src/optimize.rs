//! Nelder–Mead simplex minimization with jittered restarts.
//!
//! Objectives return [`SENTINEL`](crate::SENTINEL) for infeasible points; NaN
//! is mapped to the sentinel as well so that the simplex stays totally ordered.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::SENTINEL;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    /// Stop when every vertex is within `xtol * (1 + |best_j|)` of the best
    /// vertex in every coordinate.
    pub xtol: f64,
    pub max_evals: usize,
    /// Number of additional runs started from jittered copies of the best point.
    pub restarts: usize,
    /// Relative jitter applied to restart points.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions { xtol: 1e-8, max_evals: 5000, restarts: 3, jitter: 0.05, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub iterations: usize,
    pub converged: bool,
}

fn clean(v: f64) -> f64 {
    if v.is_nan() {
        SENTINEL
    } else {
        v.min(SENTINEL)
    }
}

/// One Nelder–Mead run from `x0` with initial edge lengths `step`.
pub fn nelder_mead<F>(f: &mut F, x0: &[f64], step: &[f64], xtol: f64, max_evals: usize) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert_eq!(n, step.len(), "step must match dimension");
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        clean(f(x))
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += if step[i] != 0.0 { step[i] } else { 1e-4 };
        let fv = eval(&v, &mut evals);
        simplex.push((v, fv));
    }

    let (alpha, gamma, rho, shrink) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0usize;
    let mut converged = false;

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0].0;
        let spread = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(best).map(|(a, b)| (a - b).abs() / (1.0 + b.abs())))
            .fold(0.0f64, f64::max);
        if spread <= xtol {
            converged = simplex[0].1 < SENTINEL;
            break;
        }
        if evals >= max_evals {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect()
        };

        let xr = along(alpha);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(gamma);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let xc = along(rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < worst.1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let b = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            for (x, bj) in vertex.0.iter_mut().zip(&b) {
                *x = bj + shrink * (*x - bj);
            }
            vertex.1 = eval(&vertex.0, &mut evals);
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    Minimum { x, f: fx, evals, iterations, converged }
}

/// Nelder–Mead from `x0`, followed by `opts.restarts` runs from jittered
/// copies of the incumbent. The best point wins; ties keep the earlier one.
/// `converged` is true when any run met the stopping rule.
pub fn minimize<F>(mut f: F, x0: &[f64], step: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let mut best = nelder_mead(&mut f, x0, step, opts.xtol, opts.max_evals);
    let mut any_converged = best.converged;
    let mut total_evals = best.evals;
    let mut total_iters = best.iterations;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.restarts {
        let start: Vec<f64> = best
            .x
            .iter()
            .zip(step)
            .map(|(x, s)| {
                let u: f64 = rng.random_range(-1.0..1.0);
                x + opts.jitter * u * x.abs().max(s.abs())
            })
            .collect();
        let run = nelder_mead(&mut f, &start, step, opts.xtol, opts.max_evals);
        total_evals += run.evals;
        total_iters += run.iterations;
        any_converged |= run.converged;
        if run.f < best.f {
            best = run;
        }
    }
    best.evals = total_evals;
    best.iterations = total_iters;
    best.converged = any_converged && best.f < SENTINEL;
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn quadratic_bowl() {
        let m = nelder_mead(
            &mut |x: &[f64]| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2) + (x[2] - 0.5).powi(2),
            &[0.0, 0.0, 0.0],
            &[1.0, 1.0, 1.0],
            1e-10,
            5000,
        );
        assert!(m.converged);
        assert!((m.x[0] - 3.0).abs() < 1e-8);
        assert!((m.x[1] + 1.0).abs() < 1e-8);
        assert!((m.x[2] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn rosenbrock_with_restarts() {
        let m = minimize(rosenbrock, &[-1.2, 1.0], &[0.5, 0.5], &NelderMeadOptions::default());
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5, "{:?}", m.x);
    }

    #[test]
    fn respects_sentinel_region() {
        // Minimum of the unconstrained bowl at x = -1 lies in the excluded half.
        let f = |x: &[f64]| if x[0] < 0.0 { SENTINEL } else { (x[0] + 1.0).powi(2) };
        let m = minimize(f, &[2.0], &[0.5], &NelderMeadOptions::default());
        assert!(m.x[0] >= 0.0 && m.x[0] < 1e-6);
    }

    #[test]
    fn nan_is_treated_as_sentinel() {
        let f = |x: &[f64]| if x[0] > 5.0 { f64::NAN } else { (x[0] - 4.0).powi(2) };
        let m = minimize(f, &[0.0], &[3.0], &NelderMeadOptions::default());
        assert!((m.x[0] - 4.0).abs() < 1e-6);
    }

    #[test]
    fn eval_budget_stops_without_convergence() {
        let m = nelder_mead(&mut rosenbrock, &[-1.2, 1.0], &[0.5, 0.5], 1e-14, 30);
        assert!(!m.converged);
        assert!(m.evals <= 33);
    }

    #[test]
    fn deterministic() {
        let opts = NelderMeadOptions { seed: 9, ..Default::default() };
        let a = minimize(rosenbrock, &[-1.2, 1.0], &[0.5, 0.5], &opts);
        let b = minimize(rosenbrock, &[-1.2, 1.0], &[0.5, 0.5], &opts);
        assert_eq!(a, b);
    }
}
