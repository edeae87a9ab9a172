//! Binomial probabilities for trial counts up to `2^63 − 1`, in the log domain.
//!
//! Log-pmf values use the saddle-point decomposition (Stirling remainder plus
//! a deviance term), which keeps full relative accuracy even when the trial
//! count is far beyond the range where `ln Γ` differences are usable.

use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Largest admissible trial count.
pub const MAX_TRIALS: u64 = i64::MAX as u64;

/// `ln n! − [(n + ½) ln n − n + ½ ln 2π]`.
fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        return ln_gamma(n + 1.0) - (n + 0.5) * n.ln() + n - 0.5 * (2.0 * PI).ln();
    }
    let nn = n * n;
    if n > 500.0 {
        return (S0 - S1 / nn) / n;
    }
    if n > 80.0 {
        return (S0 - (S1 - S2 / nn) / nn) / n;
    }
    if n > 35.0 {
        return (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n;
    }
    (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
}

/// Deviance `x ln(x/np) + np − x`, computed without cancellation near `x = np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s;
            }
            s = s1;
        }
        return s;
    }
    x * (x / np).ln() + np - x
}

/// `ln P(X = k)` for `X ~ Bin(m, p)`.
pub fn log_pmf(k: u64, m: u64, p: f64) -> f64 {
    if k > m {
        return f64::NEG_INFINITY;
    }
    if p == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p == 1.0 {
        return if k == m { 0.0 } else { f64::NEG_INFINITY };
    }
    let (kf, mf) = (k as f64, m as f64);
    if k == 0 {
        return mf * (-p).ln_1p();
    }
    if k == m {
        return mf * p.ln();
    }
    let q = 1.0 - p;
    let lc = stirlerr(mf) - stirlerr(kf) - stirlerr(mf - kf) - bd0(kf, mf * p) - bd0(mf - kf, mf * q);
    let lf = (2.0 * PI).ln() + kf.ln() + (-kf / mf).ln_1p();
    lc - 0.5 * lf
}

/// Sums `exp(f(k))` over `k ∈ [lo, hi]` for a concave `f` peaking at `peak`,
/// walking outward until terms fall 50 nats below the running maximum.
/// With `stride > 1` each sample stands for `stride` consecutive integers,
/// which is only used when the terms vary on a much longer scale.
fn log_sum_concave(lo: u64, hi: u64, peak: u64, stride: u64, f: impl Fn(u64) -> f64) -> f64 {
    let peak = peak.clamp(lo, hi);
    let top = f(peak);
    if top == f64::NEG_INFINITY {
        return top;
    }
    let w = (stride as f64).ln();
    let mut acc = 1.0;
    let cutoff = top - 50.0;
    let mut k = peak;
    while k < hi {
        k = k.saturating_add(stride).min(hi);
        let v = f(k);
        if v < cutoff {
            break;
        }
        acc += (v - top + if stride > 1 { w } else { 0.0 }).exp();
    }
    let mut k = peak;
    while k > lo {
        k = k.saturating_sub(stride).max(lo);
        let v = f(k);
        if v < cutoff {
            break;
        }
        acc += (v - top + if stride > 1 { w } else { 0.0 }).exp();
    }
    top + acc.ln()
}

fn stride_for(m: u64, p: f64) -> u64 {
    let sd = (m as f64 * p * (1.0 - p)).sqrt();
    if sd <= 2e4 {
        1
    } else {
        (sd / 64.0) as u64
    }
}

/// `ln P(X ≥ t)` for `X ~ Bin(m, p)`.
pub fn log_tail(m: u64, p: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t > m as f64 {
        return f64::NEG_INFINITY;
    }
    let k0 = t.ceil() as u64;
    let mode = (((m as f64) + 1.0) * p).floor().min(m as f64) as u64;
    log_sum_concave(k0, m, mode.max(k0), stride_for(m, p), |k| log_pmf(k, m, p)).min(0.0)
}

/// Exact `P(X ≥ t)` for `X ~ Bin(m, p)`, summed in the log domain.
pub fn binomial_tail_prob(m: u64, p: f64, t: f64) -> f64 {
    log_tail(m, p, t).exp()
}

/// Integer argmax of a concave function on `[lo, hi]` by ternary search.
fn concave_argmax(mut lo: u64, mut hi: u64, f: impl Fn(u64) -> f64) -> u64 {
    while hi - lo > 2 {
        let m1 = lo + (hi - lo) / 3;
        let m2 = hi - (hi - lo) / 3;
        if f(m1) < f(m2) {
            lo = m1 + 1;
        } else {
            hi = m2;
        }
    }
    (lo..=hi)
        .max_by(|&a, &b| f(a).partial_cmp(&f(b)).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap()
}

/// Number of trials `⌊e^{nA}⌋`, refusing counts above [`MAX_TRIALS`].
pub fn trial_count(n_a: f64) -> Result<u64> {
    let m = n_a.exp().floor();
    if !(m >= 1.0) || m >= MAX_TRIALS as f64 {
        return Err(Error::ResourceCap(format!(
            "e^(nA) = e^{n_a} trials exceeds 2^63 - 1"
        )));
    }
    Ok(m as u64)
}

/// `ln ∫_0^∞ e^{−nLθ} P(N ≥ e^{n(C−θ)}) dθ` with `N ~ Bin(⌊e^{nA}⌋, e^{−nB})`.
///
/// Integrating the indicator `N ≥ e^{n(C−θ)}` over `θ` first gives the exact
/// identity `∫ = (nL)^{-1} E[min(1, (N e^{−nC})^L); N ≥ 1]`, and the
/// expectation is a sum of log-concave terms.
pub fn log_integral(a: f64, b: f64, c: f64, l: u32, n: u32) -> Result<f64> {
    let nf = n as f64;
    let m = trial_count(nf * a)?;
    let p = (-nf * b).exp();
    let lf = l as f64;
    let nc = nf * c;
    let weight = |k: u64| lf * ((k as f64).ln() - nc).min(0.0);
    if p == 1.0 {
        return Ok(weight(m) - (nf * lf).ln());
    }
    if p == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let term = |k: u64| log_pmf(k, m, p) + weight(k);
    let peak = concave_argmax(1, m, term);
    let s = log_sum_concave(1, m, peak, stride_for(m, p), term);
    Ok(s - (nf * lf).ln())
}

/// The same integral by adaptive Simpson quadrature over `θ`, with absolute
/// tolerance `tol`. Only practical for small trial counts; used to
/// cross-check [`log_integral`].
pub fn integral_by_quadrature(a: f64, b: f64, c: f64, l: u32, n: u32, tol: f64) -> Result<f64> {
    let nf = n as f64;
    let m = trial_count(nf * a)?;
    let p = (-nf * b).exp();
    let nl = nf * l as f64;
    let f = |theta: f64| (-nl * theta).exp() * binomial_tail_prob(m, p, (nf * (c - theta)).exp());
    let upper = 80.0 / nl;
    fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(a, m, fa, flm, fm);
        let right = simpson(m, b, fm, frm, fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    // Split at a fixed number of panels first so no step of the tail is missed entirely.
    let panels = 256;
    let h = upper / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let (x0, x1) = (i as f64 * h, (i + 1) as f64 * h);
        let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
        let whole = simpson(x0, x1, f0, fm, f1);
        total += rec(&f, x0, x1, f0, fm, f1, whole, tol / panels as f64, 40);
    }
    Ok(total)
}
