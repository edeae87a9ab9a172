//! Brute-force oracles written from the exponent formulas, independent of
//! the library's solvers. All quantities in nats; joints are 2×2 row-major.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub type J = [f64; 4];

pub fn plus(t: f64) -> f64 {
    if t > 0.0 {
        t
    } else if t.is_nan() {
        t
    } else {
        0.0
    }
}

pub fn kl(p: &J, q: &J) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        if p[i] > 0.0 {
            if q[i] == 0.0 {
                return f64::INFINITY;
            }
            s += p[i] * (p[i] / q[i]).ln();
        }
    }
    s.max(0.0)
}

pub fn mi(p: &J) -> f64 {
    let px = [p[0] + p[1], p[2] + p[3]];
    let py = [p[0] + p[2], p[1] + p[3]];
    let mut s = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            let v = p[2 * x + y];
            if v > 0.0 {
                s += v * (v / (px[x] * py[y])).ln();
            }
        }
    }
    s.max(0.0)
}

#[derive(Clone, Copy, Debug)]
pub enum Metric {
    /// `Σ P(x,y) ln V(y|x)`, rows of `V` given as `[V(0|0), V(1|0), V(0|1), V(1|1)]`.
    Additive(J),
    Mmi,
    Constant(f64),
}

pub fn metric(g: &Metric, p: &J) -> f64 {
    match g {
        Metric::Additive(v) => {
            let mut s = 0.0;
            for i in 0..4 {
                if p[i] > 0.0 {
                    if v[i] == 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    s += p[i] * v[i].ln();
                }
            }
            s
        }
        Metric::Mmi => mi(p),
        Metric::Constant(c) => *c,
    }
}

pub fn reference(w: &J, q: [f64; 2]) -> J {
    [q[0] * w[0], q[0] * w[1], q[1] * w[2], q[1] * w[3]]
}

/// Every joint count table with row sums `(k0, k1)`, as probabilities.
pub fn outer_grid(k0: u32, k1: u32) -> Vec<(J, [u32; 4])> {
    let d = (k0 + k1) as f64;
    let mut v = Vec::new();
    for a in 0..=k0 {
        for b in 0..=k1 {
            let c = [a, k0 - a, b, k1 - b];
            v.push((c.map(|x| x as f64 / d), c));
        }
    }
    v
}

/// Every joint count table with row sums `(k0, k1)` and column sums `(n0, n1)`.
pub fn inner_grid(k0: u32, k1: u32, n0: u32) -> Vec<J> {
    let d = (k0 + k1) as f64;
    let n1 = k0 + k1 - n0;
    let lo = k0.saturating_sub(n1);
    let hi = k0.min(n0);
    (lo..=hi)
        .map(|t| {
            let c = [t, k0 - t, n0 - t, k1 + t - n0];
            c.map(|x| x as f64 / d)
        })
        .collect()
}

/// `min_P D(P‖Q×W) + slope·[I_P − R]_+` over joint types.
pub fn hinge_grid(w: &J, k0: u32, k1: u32, r: f64, slope: f64) -> f64 {
    let d = (k0 + k1) as f64;
    let rf = reference(w, [k0 as f64 / d, k1 as f64 / d]);
    outer_grid(k0, k1)
        .iter()
        .map(|(p, _)| kl(p, &rf) + slope * plus(mi(p) - r))
        .fold(f64::INFINITY, f64::min)
}

/// `min { D(P‖Q×W) : I_P ≤ R }` over joint types.
pub fn sphere_packing_grid(w: &J, k0: u32, k1: u32, r: f64) -> f64 {
    let d = (k0 + k1) as f64;
    let rf = reference(w, [k0 as f64 / d, k1 as f64 / d]);
    outer_grid(k0, k1)
        .iter()
        .filter(|(p, _)| mi(p) <= r)
        .map(|(p, _)| kl(p, &rf))
        .fold(f64::INFINITY, f64::min)
}

/// Nested type-grid value of the fixed-list randomized exponent:
/// `min_P D + min_P̃ [I_P̃ − R]_+ + L[g(P) − g(P̃) − [R − I_P̃]_+]_+`.
pub fn e1_nested(w: &J, k0: u32, k1: u32, g: &Metric, r: f64, l: f64) -> f64 {
    let d = (k0 + k1) as f64;
    let rf = reference(w, [k0 as f64 / d, k1 as f64 / d]);
    let mut best = f64::INFINITY;
    for (p, c) in outer_grid(k0, k1) {
        let dv = kl(&p, &rf);
        if !(dv < best) {
            continue;
        }
        let gp = metric(g, &p);
        let mut inner = f64::INFINITY;
        for pt in inner_grid(k0, k1, c[0] + c[2]) {
            let it = mi(&pt);
            let t = plus(it - r) + l * plus(gp - metric(g, &pt) - plus(r - it));
            if t < inner {
                inner = t;
            }
        }
        best = best.min(dv + inner);
    }
    best
}

/// Nested type-grid value of the exponential-list randomized exponent:
/// `min_P D + min_P̃ [I_P̃ − (R − λ) − (g(P̃) − g(P))]_+`.
pub fn e2_nested(w: &J, k0: u32, k1: u32, g: &Metric, r: f64, lambda: f64) -> f64 {
    let d = (k0 + k1) as f64;
    let rf = reference(w, [k0 as f64 / d, k1 as f64 / d]);
    let mut best = f64::INFINITY;
    for (p, c) in outer_grid(k0, k1) {
        let dv = kl(&p, &rf);
        if !(dv < best) {
            continue;
        }
        let gp = metric(g, &p);
        let mut inner = f64::INFINITY;
        for pt in inner_grid(k0, k1, c[0] + c[2]) {
            let t = plus(mi(&pt) - (r - lambda) - (metric(g, &pt) - gp));
            if t < inner {
                inner = t;
            }
        }
        best = best.min(dv + inner);
    }
    best
}

/// Exact `P(X ≥ t)` for `X ~ Bin(m, num/den)` in rational arithmetic.
pub fn binomial_tail_exact(m: u64, num: i64, den: i64, t: f64) -> f64 {
    let p = BigRational::new(BigInt::from(num), BigInt::from(den));
    let q = BigRational::one() - &p;
    let start = if t <= 0.0 { 0 } else { t.ceil() as u64 };
    if start > m {
        return 0.0;
    }
    let mut total = BigRational::zero();
    let mut binom = BigInt::one();
    for k in 0..=m {
        if k >= start {
            let term = BigRational::from_integer(binom.clone()) * pow(&p, k) * pow(&q, m - k);
            total += term;
        }
        binom = binom * BigInt::from(m - k) / BigInt::from(k + 1);
    }
    total.to_f64().unwrap()
}

fn pow(x: &BigRational, e: u64) -> BigRational {
    let mut r = BigRational::one();
    for _ in 0..e {
        r *= x;
    }
    r
}

/// `[I_P̃ − R]_+ + L[g(P) − g(P̃) − [R − I_P̃]_+]_+`, restated from its definition.
pub fn e_hat_a(p: &J, pt: &J, r: f64, l: f64, g: &Metric) -> f64 {
    let it = mi(pt);
    let first = if it > r { it - r } else { 0.0 };
    let shortfall = if r > it { r - it } else { 0.0 };
    let inner = metric(g, p) - metric(g, pt) - shortfall;
    first + l * if inner > 0.0 { inner } else { 0.0 }
}

pub fn bsc(p: f64) -> J {
    [1.0 - p, p, p, 1.0 - p]
}

pub const LN2: f64 = std::f64::consts::LN_2;
