//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use glme::GevParams;

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK_WEIGHTS[7] * fc;
    let mut gauss = GAUSS_WEIGHTS[3] * fc;
    for i in 0..7 {
        let s = f(c - h * GK_NODES[i]) + f(c + h * GK_NODES[i]);
        kronrod += GK_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += GAUSS_WEIGHTS[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]`:
/// repeatedly bisects the panel with the largest error estimate until the
/// total estimate is below `tol` (or 4000 panels are in use).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let (v, e) = gk15(&f, a, b);
    let mut panels = vec![(a, b, v, e)];
    while panels.len() < 4000 {
        let total_err: f64 = panels.iter().map(|p| p.3).sum();
        if total_err <= tol {
            break;
        }
        let (k, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (lo, hi, _, _) = panels.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
    }
    panels.sort_by(|x, y| x.0.total_cmp(&y.0));
    panels.iter().map(|p| p.2).sum()
}

/// `E[g(X)]` for a GEV variable, integrating `g(x) f(x)` over the real line
/// through `x = mu + sigma * t / (1 - t^2)`, `t` in (-1, 1), clipped to the
/// support.
pub fn gev_expectation<G: Fn(f64) -> f64>(p: &GevParams, g: G, tol: f64) -> f64 {
    let map = |t: f64| p.mu + p.sigma * t / (1.0 - t * t);
    let jac = |t: f64| p.sigma * (1.0 + t * t) / (1.0 - t * t).powi(2);
    let integrand = |t: f64| {
        let x = map(t);
        if !x.is_finite() {
            return 0.0;
        }
        let d = glme::gev_pdf(p, x).unwrap();
        if d == 0.0 {
            0.0
        } else {
            g(x) * d * jac(t)
        }
    };
    // Split at the support endpoint so the kink is a panel boundary.
    let (lo, hi) = p.support();
    let inv = |x: f64| {
        // Solve sigma t / (1 - t^2) = x - mu for t in (-1, 1).
        let u = (x - p.mu) / p.sigma;
        if u == 0.0 {
            0.0
        } else {
            (-1.0 + (1.0 + 4.0 * u * u).sqrt()) / (2.0 * u)
        }
    };
    let a = if lo.is_finite() { inv(lo) } else { -1.0 };
    let b = if hi.is_finite() { inv(hi) } else { 1.0 };
    integrate(integrand, a, b, tol)
}

/// Sample L-moments `l_1, l_2, l_3` by enumerating every subset of the order
/// statistics of size 1, 2, 3.
pub fn brute_force_lmoments(x: &[f64]) -> [f64; 3] {
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    let (mut l1, mut l2, mut l3) = (0.0, 0.0, 0.0);
    let (mut c1, mut c2, mut c3) = (0.0, 0.0, 0.0);
    for i in 0..n {
        l1 += s[i];
        c1 += 1.0;
        for j in i + 1..n {
            l2 += 0.5 * (s[j] - s[i]);
            c2 += 1.0;
            for k in j + 1..n {
                l3 += (s[k] - 2.0 * s[j] + s[i]) / 3.0;
                c3 += 1.0;
            }
        }
    }
    [l1 / c1, l2 / c2, l3 / c3]
}

/// Root of an increasing function on `[a, b]` by bisection.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..400 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if f(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Small deterministic generator (SplitMix64) for test inputs that must not
/// depend on the crate's own sampling.
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    /// GEV draw by inverting the CDF with bisection.
    pub fn gev(&mut self, p: &GevParams) -> f64 {
        let u = self.uniform();
        let (lo, hi) = p.support();
        let lo = if lo.is_finite() { lo } else { p.mu - 1e3 * p.sigma };
        let hi = if hi.is_finite() { hi } else { p.mu + 1e12 * p.sigma };
        bisect(|x| glme::gev_cdf(p, x).unwrap() - u, lo, hi)
    }
}
