mod common;

use common::{brute_force_lmoments, gev_expectation, SplitMix};
use glme::{
    gev_cdf, gev_population_lmoments, gev_sample, gld, lmoment_cov, sample_lmoments, CovMatrix3,
    CovMethod, CovSource, GevParams, LMomentTriple,
};
use proptest::prelude::*;

#[test]
fn sample_lmoments_match_subset_enumeration() {
    let mut rng = SplitMix(2024);
    for trial in 0..200 {
        let n = 3 + trial % 10;
        let x: Vec<f64> = (0..n).map(|_| 10.0 * rng.uniform() - 3.0).collect();
        let l = sample_lmoments(&x).unwrap();
        let b = brute_force_lmoments(&x);
        for (got, want) in l.as_array().iter().zip(b) {
            assert!((got - want).abs() < 1e-12, "n={n}: {got} vs {want}");
        }
    }
}

#[test]
fn population_lmoments_match_quadrature() {
    for xi in [-0.45, -0.2, 0.0, 0.2, 0.45, 0.8] {
        let p = GevParams::new(1.0, 2.0, xi).unwrap();
        let f = |x: f64| gev_cdf(&p, x).unwrap();
        let l1 = gev_expectation(&p, |x| x, 1e-13);
        let l2 = gev_expectation(&p, |x| x * (2.0 * f(x) - 1.0), 1e-13);
        let l3 = gev_expectation(&p, |x| x * (6.0 * f(x) * f(x) - 6.0 * f(x) + 1.0), 1e-13);
        let pop = gev_population_lmoments(&p).unwrap();
        assert!((pop.l1 - l1).abs() < 1e-8, "xi={xi}: l1 {} vs {l1}", pop.l1);
        assert!((pop.l2 - l2).abs() < 1e-8, "xi={xi}: l2 {} vs {l2}", pop.l2);
        assert!((pop.l3 - l3).abs() < 1e-8, "xi={xi}: l3 {} vs {l3}", pop.l3);
    }
}

/// Unbiased estimate of `Cov(b_r, b_s)` for the probability-weighted moment
/// estimators, from the U-statistic definition: `b_r` averages
/// `max(A) / (r + 1)` over subsets `A` of size `r + 1`, and `beta_r beta_s`
/// is estimated by averaging products over disjoint subset pairs.
fn brute_force_pwm_cov(x: &[f64]) -> [[f64; 3]; 3] {
    let n = x.len();
    let subsets = |k: usize| -> Vec<u32> { (0u32..1 << n).filter(|m| m.count_ones() as usize == k).collect() };
    let kernel = |mask: u32, r: usize| -> f64 {
        let m = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| x[i]).fold(f64::NEG_INFINITY, f64::max);
        m / (r + 1) as f64
    };
    let sets: Vec<Vec<u32>> = (0..3).map(|r| subsets(r + 1)).collect();
    let b: Vec<f64> = (0..3)
        .map(|r| sets[r].iter().map(|&m| kernel(m, r)).sum::<f64>() / sets[r].len() as f64)
        .collect();
    let mut cov = [[0.0; 3]; 3];
    for r in 0..3 {
        for s in 0..3 {
            let (mut sum, mut count) = (0.0, 0.0);
            for &a in &sets[r] {
                for &c in &sets[s] {
                    if a & c == 0 {
                        sum += kernel(a, r) * kernel(c, s);
                        count += 1.0;
                    }
                }
            }
            cov[r][s] = b[r] * b[s] - sum / count;
        }
    }
    let m = [[1.0, 0.0, 0.0], [-1.0, 2.0, 0.0], [1.0, -6.0, 6.0]];
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for a in 0..3 {
                for c in 0..3 {
                    out[i][j] += m[i][a] * cov[a][c] * m[j][c];
                }
            }
        }
    }
    out
}

#[test]
fn exact_covariance_matches_enumeration() {
    let mut rng = SplitMix(77);
    let mut checked = 0;
    for _ in 0..40 {
        let x: Vec<f64> = (0..10).map(|_| rng.gev(&GevParams { mu: 0.0, sigma: 1.0, xi: -0.2 })).collect();
        let c = lmoment_cov(&x, CovMethod::Exact, 0).unwrap();
        if c.source != CovSource::Exact {
            continue;
        }
        let want = brute_force_pwm_cov(&x);
        for i in 0..3 {
            for j in 0..3 {
                let tol = 1e-10 * (1.0 + want[i][j].abs());
                assert!((c.entries[i][j] - want[i][j]).abs() < tol, "({i},{j}) {} vs {}", c.entries[i][j], want[i][j]);
            }
        }
        checked += 1;
    }
    assert!(checked >= 20, "only {checked} samples had a positive definite estimate");
}

/// Covariance of sample L-moments over independent replications.
fn replication_cov(p: &GevParams, n: usize, reps: usize) -> [[f64; 3]; 3] {
    let ls: Vec<[f64; 3]> = (0..reps)
        .map(|r| sample_lmoments(&gev_sample(p, n, 10_000 + r as u64).unwrap()).unwrap().as_array())
        .collect();
    let mean: Vec<f64> = (0..3).map(|i| ls.iter().map(|l| l[i]).sum::<f64>() / reps as f64).collect();
    let mut c = [[0.0; 3]; 3];
    for l in &ls {
        for i in 0..3 {
            for j in 0..3 {
                c[i][j] += (l[i] - mean[i]) * (l[j] - mean[j]) / (reps - 1) as f64;
            }
        }
    }
    c
}

/// Mean of a covariance estimator over independent samples.
fn average_estimate(p: &GevParams, n: usize, samples: usize, method: CovMethod) -> [[f64; 3]; 3] {
    let mut avg = [[0.0; 3]; 3];
    for s in 0..samples {
        let x = gev_sample(p, n, 500 + s as u64).unwrap();
        let v = lmoment_cov(&x, method, s as u64).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                avg[i][j] += v.entries[i][j] / samples as f64;
            }
        }
    }
    avg
}

#[test]
fn covariance_estimators_track_repeated_sampling() {
    let p = GevParams::new(100.0, 30.0, -0.2).unwrap();
    let n = 50;
    let truth = replication_cov(&p, n, 10_000);
    let exact = average_estimate(&p, n, 400, CovMethod::Exact);
    let boot = average_estimate(&p, n, 400, CovMethod::Bootstrap { b: 400 });
    let rel = |est: &[[f64; 3]; 3], i: usize, j: usize| (est[i][j] - truth[i][j]) / truth[i][j];
    for i in 0..3 {
        for j in 0..3 {
            assert!(rel(&exact, i, j).abs() < 0.15, "exact ({i},{j}): {} vs {}", exact[i][j], truth[i][j]);
            if i < 2 && j < 2 {
                assert!(rel(&boot, i, j).abs() < 0.15, "bootstrap ({i},{j}): {} vs {}", boot[i][j], truth[i][j]);
            } else {
                // The nonparametric bootstrap understates the spread of the
                // third L-moment for heavy upper tails.
                let r = rel(&boot, i, j);
                assert!(r < 0.0 && r > -0.3, "bootstrap ({i},{j}): relative error {r}");
            }
        }
    }
}

#[test]
fn bootstrap_is_reproducible_and_seed_sensitive() {
    let x = gev_sample(&GevParams::new(0.0, 1.0, 0.1).unwrap(), 40, 3).unwrap();
    let a = lmoment_cov(&x, CovMethod::Bootstrap { b: 200 }, 5).unwrap();
    let b = lmoment_cov(&x, CovMethod::Bootstrap { b: 200 }, 5).unwrap();
    let c = lmoment_cov(&x, CovMethod::Bootstrap { b: 200 }, 6).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn gld_identity_is_squared_distance() {
    let lam = LMomentTriple::new(1.0, 2.0, 3.0);
    let l = LMomentTriple::new(1.5, 1.0, 3.0);
    assert!((gld(&lam, &l, &CovMatrix3::identity()).unwrap() - 1.25).abs() < 1e-15);
}

proptest! {
    #[test]
    fn sample_lmoments_equivariance(
        x in prop::collection::vec(-100.0..100.0f64, 3..40),
        a in -10.0..10.0f64, b in 0.1..10.0f64,
    ) {
        let l = sample_lmoments(&x).unwrap();
        let y: Vec<f64> = x.iter().map(|v| a + b * v).collect();
        let m = sample_lmoments(&y).unwrap();
        let scale = 1.0 + x.iter().fold(0.0f64, |s, v| s.max(v.abs())) * b + a.abs();
        prop_assert!((m.l1 - (a + b * l.l1)).abs() < 1e-10 * scale);
        prop_assert!((m.l2 - b * l.l2).abs() < 1e-10 * scale);
        prop_assert!((m.l3 - b * l.l3).abs() < 1e-10 * scale);
    }

    #[test]
    fn sample_lmoments_permutation_invariant(mut x in prop::collection::vec(-100.0..100.0f64, 3..30)) {
        let l = sample_lmoments(&x).unwrap();
        x.reverse();
        let r = sample_lmoments(&x).unwrap();
        prop_assert!((l.l1 - r.l1).abs() < 1e-12 && (l.l2 - r.l2).abs() < 1e-12 && (l.l3 - r.l3).abs() < 1e-12);
    }

    #[test]
    fn l2_nonnegative_and_tau3_bounded(x in prop::collection::vec(-100.0..100.0f64, 3..30)) {
        let l = sample_lmoments(&x).unwrap();
        prop_assert!(l.l2 >= -1e-12);
        if l.l2 > 1e-9 {
            prop_assert!(l.tau3().abs() <= 1.0 + 1e-9);
        }
    }
}
