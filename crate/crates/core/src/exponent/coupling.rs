//! I-projections onto the set of joints with prescribed marginals.
//!
//! `scale_to_margins` finds the table of the form `a(x) K(x,y) b(y)` whose
//! row sums are `q` and column sums are `py`; among all tables with those
//! margins it minimizes `D(P̃ ‖ K)`. Sinkhorn sweeps in the log domain give a
//! warm start, then damped Newton steps on the dual finish the job.

use crate::error::{Error, Result};
use crate::scalar::{log_sum_exp, Real};

/// Checks Hall's condition for the bipartite support of `log_k`, i.e. that
/// some nonnegative table supported on `{log_k > -∞}` has the given margins.
pub(crate) fn margins_feasible<F: Real>(log_k: &[F], nx: usize, ny: usize, q: &[F], py: &[F]) -> bool {
    let rows: Vec<usize> = (0..nx).filter(|&x| q[x] > F::zero()).collect();
    let slack = F::lit(1e-12).max(F::mass_tol());
    if rows.len() > 20 {
        return true;
    }
    for mask in 1u32..(1u32 << rows.len()) {
        let mut demand = F::zero();
        let mut reach = vec![false; ny];
        for (b, &x) in rows.iter().enumerate() {
            if mask & (1 << b) != 0 {
                demand = demand + q[x];
                for y in 0..ny {
                    if log_k[x * ny + y] > F::neg_infinity() && py[y] > F::zero() {
                        reach[y] = true;
                    }
                }
            }
        }
        let supply: F = (0..ny).filter(|&y| reach[y]).map(|y| py[y]).sum();
        if demand > supply + slack {
            return false;
        }
    }
    true
}

/// Returns the I-projection of `exp(log_k)` onto tables with margins `q`, `py`.
#[cfg(test)]
fn scale_to_margins<F: Real>(
    log_k: &[F],
    nx: usize,
    ny: usize,
    q: &[F],
    py: &[F],
) -> Result<Vec<F>> {
    scale_to_margins_warm(log_k, nx, ny, q, py, None).map(|(p, _)| p)
}

/// As [`scale_to_margins`], starting from column potentials `warm` of a
/// nearby kernel (indexed over the columns with `py > 0`). Also returns the
/// final column potentials.
pub(crate) fn scale_to_margins_warm<F: Real>(
    log_k: &[F],
    nx: usize,
    ny: usize,
    q: &[F],
    py: &[F],
    warm: Option<&[F]>,
) -> Result<(Vec<F>, Vec<F>)> {
    // Restrict to the supported rows and columns.
    let xs: Vec<usize> = (0..nx).filter(|&x| q[x] > F::zero()).collect();
    let ys: Vec<usize> = (0..ny).filter(|&y| py[y] > F::zero()).collect();
    let (m, k) = (xs.len(), ys.len());
    let mut lk = vec![F::neg_infinity(); m * k];
    for (a, &x) in xs.iter().enumerate() {
        for (b, &y) in ys.iter().enumerate() {
            lk[a * k + b] = log_k[x * ny + y];
        }
    }
    let qr: Vec<F> = xs.iter().map(|&x| q[x]).collect();
    let pr: Vec<F> = ys.iter().map(|&y| py[y]).collect();
    let full_support = lk.iter().all(|v| *v > F::neg_infinity());
    if !full_support && !margins_feasible(&lk, m, k, &qr, &pr) {
        return Err(Error::Infeasible(
            "no table on the kernel support has the requested margins".into(),
        ));
    }
    let lq: Vec<F> = qr.iter().map(|v| v.ln()).collect();
    let lp: Vec<F> = pr.iter().map(|v| v.ln()).collect();
    let mut alpha = vec![F::zero(); m];
    let mut gamma = match warm {
        Some(g) if g.len() == k && g.iter().all(|v| v.is_finite()) => g.to_vec(),
        _ => vec![F::zero(); k],
    };
    let tol = F::tight() * F::lit(16.0);

    let entry = |alpha: &[F], gamma: &[F], a: usize, b: usize| -> F {
        let v = lk[a * k + b];
        if v == F::neg_infinity() {
            F::zero()
        } else {
            (v + alpha[a] + gamma[b]).exp()
        }
    };
    let residual = |alpha: &[F], gamma: &[F]| -> F {
        let mut worst = F::zero();
        for b in 0..k {
            let s: F = (0..m).map(|a| entry(alpha, gamma, a, b)).sum();
            worst = worst.max((s - pr[b]).abs());
        }
        for a in 0..m {
            let s: F = (0..k).map(|b| entry(alpha, gamma, a, b)).sum();
            worst = worst.max((s - qr[a]).abs());
        }
        worst
    };
    let sinkhorn = |alpha: &mut [F], gamma: &mut [F]| {
        for a in 0..m {
            let s = log_sum_exp((0..k).map(|b| lk[a * k + b] + gamma[b]));
            alpha[a] = lq[a] - s;
        }
        for b in 0..k {
            let s = log_sum_exp((0..m).map(|a| lk[a * k + b] + alpha[a]));
            gamma[b] = lp[b] - s;
        }
    };
    // Convex dual: f = Σ exp(lk + α + γ) − Σ q α − Σ p γ.
    let dual = |alpha: &[F], gamma: &[F]| -> F {
        let mut f = F::zero();
        for a in 0..m {
            for b in 0..k {
                f = f + entry(alpha, gamma, a, b);
            }
        }
        for a in 0..m {
            f = f - qr[a] * alpha[a];
        }
        for b in 0..k {
            f = f - pr[b] * gamma[b];
        }
        f
    };

    let sweeps = if warm.is_some() { 1 } else { 8 };
    for _ in 0..sweeps {
        sinkhorn(&mut alpha, &mut gamma);
    }
    let mut res = residual(&alpha, &gamma);
    // Newton on (α, γ_0..γ_{k-2}); γ_{k-1} is pinned by the gauge freedom.
    let dim = m + k - 1;
    let mut newton_iters = 0;
    while res > tol && newton_iters < 60 && dim > 0 {
        newton_iters += 1;
        let mut t = vec![F::zero(); m * k];
        for a in 0..m {
            for b in 0..k {
                t[a * k + b] = entry(&alpha, &gamma, a, b);
            }
        }
        let rs: Vec<F> = (0..m).map(|a| (0..k).map(|b| t[a * k + b]).sum()).collect();
        let cs: Vec<F> = (0..k).map(|b| (0..m).map(|a| t[a * k + b]).sum()).collect();
        let mut h = vec![F::zero(); dim * dim];
        let mut g = vec![F::zero(); dim];
        for a in 0..m {
            g[a] = rs[a] - qr[a];
            h[a * dim + a] = rs[a];
        }
        for b in 0..k - 1 {
            let j = m + b;
            g[j] = cs[b] - pr[b];
            h[j * dim + j] = cs[b];
            for a in 0..m {
                h[a * dim + j] = t[a * k + b];
                h[j * dim + a] = t[a * k + b];
            }
        }
        // Tiny ridge keeps the system solvable when a row of `t` underflows.
        for i in 0..dim {
            h[i * dim + i] = h[i * dim + i] + F::epsilon();
        }
        let step = match solve_dense(h, g, dim) {
            Some(s) => s,
            None => break,
        };
        let f0 = dual(&alpha, &gamma);
        let mut eta = F::one();
        let mut accepted = false;
        for _ in 0..40 {
            let na: Vec<F> = (0..m).map(|a| alpha[a] - eta * step[a]).collect();
            let mut ng = gamma.clone();
            for b in 0..k - 1 {
                ng[b] = gamma[b] - eta * step[m + b];
            }
            let f1 = dual(&na, &ng);
            // Near the optimum the dual is flat to rounding; fall back on the residual.
            if f1.is_finite() && (f1 <= f0 || residual(&na, &ng) < res) {
                alpha = na;
                gamma = ng;
                accepted = true;
                break;
            }
            eta = eta * F::lit(0.5);
        }
        if !accepted {
            break;
        }
        res = residual(&alpha, &gamma);
    }
    // Boundary solutions (margins reachable only on a sub-support) make the
    // duals diverge; plain sweeps still converge there, just slowly.
    let mut sweeps = 0;
    while res > tol && sweeps < 20_000 {
        sinkhorn(&mut alpha, &mut gamma);
        sweeps += 1;
        if sweeps % 16 == 0 {
            res = residual(&alpha, &gamma);
        }
    }
    // Final row pass makes the X-marginal exact.
    for a in 0..m {
        let s = log_sum_exp((0..k).map(|b| lk[a * k + b] + gamma[b]));
        alpha[a] = lq[a] - s;
    }
    let mut out = vec![F::zero(); nx * ny];
    for (a, &x) in xs.iter().enumerate() {
        for (b, &y) in ys.iter().enumerate() {
            out[x * ny + y] = entry(&alpha, &gamma, a, b);
        }
    }
    Ok((out, gamma))
}

/// Gaussian elimination with partial pivoting on a dense `n × n` system.
pub(crate) fn solve_dense<F: Real>(mut a: Vec<F>, mut b: Vec<F>, n: usize) -> Option<Vec<F>> {
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| {
            a[i * n + col]
                .abs()
                .partial_cmp(&a[j * n + col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if !(a[piv * n + col].abs() > F::zero()) {
            return None;
        }
        if piv != col {
            for c in 0..n {
                a.swap(piv * n + c, col * n + c);
            }
            b.swap(piv, col);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == F::zero() {
                continue;
            }
            for c in col..n {
                a[r * n + c] = a[r * n + c] - f * a[col * n + c];
            }
            b[r] = b[r] - f * b[col];
        }
    }
    let mut x = vec![F::zero(); n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s = s - a[r * n + c] * x[c];
        }
        x[r] = s / a[r * n + r];
    }
    Some(x)
}
