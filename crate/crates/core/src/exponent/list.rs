//! List-decoding exponents: randomized and deterministic, fixed and
//! exponentially growing list sizes.
//!
//! The randomized fixed-list exponent is a double minimization. For a given
//! outer joint `P`, the inner objective over `P̃` (same X-marginal `Q`, same
//! Y-marginal as `P`) depends on `P̃` only through `u = I_P̃` and `v = g(P̃)`,
//! and is nondecreasing in `u`, nonincreasing in `v`. For additive metrics
//! the efficient `(u, v)` pairs are the I-projections of
//! `Q(x) P_Y(y) V(y|x)^β` onto the marginal slice, `β ≥ 0`, and the inner
//! optimum sits at one of a handful of `β` values located by root finding.

use std::cell::RefCell;
use std::sync::atomic::{AtomicBool, Ordering};

use super::coupling::scale_to_margins_warm;
use super::solver::{minimize_over_joint_from, Output, SolverConfig};
use super::{check_inputs, check_rate, hinge_exponent, sphere_packing_solution, ExponentQuery, ListSize};
use crate::error::{Error, Result};
use crate::metric::MetricSpec;
use crate::prob::{kl_slices, mutual_information, Dist, Dmc, JointDist};
use crate::scalar::{pos, xlogxy, Real};

/// An exponent together with a flag raised when the point relied on a
/// convention (a clamped rate, or an indeterminate `∞ − ∞` metric gap that
/// was resolved as `+∞`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentValue<F> {
    pub value: F,
    pub flagged: bool,
}

/// The marginal slice `{P̃ : P̃_X = Q, P̃_Y = P_Y}` viewed through an additive metric.
struct Slice<'a, F> {
    q: &'a [F],
    py: &'a [F],
    log_v: Vec<F>,
    nx: usize,
    ny: usize,
    /// Column potentials of the last projection, reused as a warm start.
    warm: RefCell<Option<Vec<F>>>,
}

impl<'a, F: Real> Slice<'a, F> {
    fn new(q: &'a [F], py: &'a [F], v: &Dmc<F>) -> Self {
        let log_v = v
            .matrix()
            .iter()
            .map(|&w| if w > F::zero() { w.ln() } else { F::neg_infinity() })
            .collect();
        Self {
            q,
            py,
            log_v,
            nx: v.x_size(),
            ny: v.y_size(),
            warm: RefCell::new(None),
        }
    }

    /// `(I_P̃, g(P̃))` at the I-projection for tilt `beta`; `None` when no
    /// table on the support of `V` has the slice margins.
    fn at(&self, beta: F) -> Option<(F, F)> {
        let (nx, ny) = (self.nx, self.ny);
        if beta == F::zero() {
            let p: Vec<F> = (0..nx * ny).map(|i| self.q[i / ny] * self.py[i % ny]).collect();
            return Some(self.measure(&p));
        }
        let mut lk = vec![F::neg_infinity(); nx * ny];
        for x in 0..nx {
            for y in 0..ny {
                if self.q[x] > F::zero() && self.py[y] > F::zero() {
                    let lv = self.log_v[x * ny + y];
                    lk[x * ny + y] = if beta == F::zero() {
                        self.q[x].ln() + self.py[y].ln()
                    } else if lv == F::neg_infinity() {
                        F::neg_infinity()
                    } else {
                        self.q[x].ln() + self.py[y].ln() + beta * lv
                    };
                }
            }
        }
        let warm = self.warm.borrow().clone();
        let (p, gamma) = scale_to_margins_warm(&lk, nx, ny, self.q, self.py, warm.as_deref()).ok()?;
        *self.warm.borrow_mut() = Some(gamma);
        Some(self.measure(&p))
    }

    fn measure(&self, p: &[F]) -> (F, F) {
        let (nx, ny) = (self.nx, self.ny);
        let mut u = F::zero();
        let mut v = F::zero();
        for x in 0..nx {
            for y in 0..ny {
                let m = p[x * ny + y];
                u = u + xlogxy(m, self.q[x] * self.py[y]);
                if m > F::zero() {
                    let lv = self.log_v[x * ny + y];
                    v = if lv == F::neg_infinity() { F::neg_infinity() } else { v + m * lv };
                }
            }
        }
        (u.max(F::zero()), v)
    }
}

/// Root of an increasing function on `[lo, hi]` with `f(lo) ≤ 0 ≤ f(hi)`,
/// by the Illinois variant of regula falsi, falling back to bisection when
/// an endpoint value is not finite.
fn increasing_root<F: Real>(mut f: impl FnMut(F) -> F, mut lo: F, mut hi: F, mut f_lo: F, mut f_hi: F) -> F {
    let tol = F::tight();
    let mut side = 0i8;
    for _ in 0..100 {
        if hi - lo <= tol * hi.max(F::one()) {
            break;
        }
        let mid = if f_lo.is_finite() && f_hi.is_finite() && f_hi > f_lo {
            let m = hi - f_hi * (hi - lo) / (f_hi - f_lo);
            if m > lo && m < hi {
                m
            } else {
                (lo + hi) * F::lit(0.5)
            }
        } else {
            (lo + hi) * F::lit(0.5)
        };
        let fm = f(mid);
        if fm.abs() <= tol {
            return mid;
        }
        if fm < F::zero() || fm.is_nan() {
            lo = mid;
            f_lo = fm;
            if side == -1 {
                f_hi = f_hi * F::lit(0.5);
            }
            side = -1;
        } else {
            hi = mid;
            f_hi = fm;
            if side == 1 {
                f_lo = f_lo * F::lit(0.5);
            }
            side = 1;
        }
    }
    (lo + hi) * F::lit(0.5)
}

/// Minimum over the slice `{P̃_X = Q, P̃_Y = py}` of
/// `[I_P̃ − R]_+ + L[G − g(P̃) − [R − I_P̃]_+]_+`, where `G = g(P)` and `i_p = I_P`
/// for the outer joint `P` (itself a member of the slice).
///
/// The second component reports whether an indeterminate `∞ − ∞` was met.
pub(crate) fn coupled_inner_fixed<F: Real>(
    metric: &MetricSpec<F>,
    q: &[F],
    py: &[F],
    g_p: F,
    i_p: F,
    r: F,
    l: F,
) -> (F, bool) {
    let mut flagged = false;
    let mut best = F::infinity();
    let mut offer = |u: F, v: F| {
        let t = pos(u - r) + l * pos(g_p - v - pos(r - u));
        if t.is_nan() {
            flagged = true;
        } else if t < best {
            best = t;
        }
    };
    // P̃ = P is always feasible.
    offer(i_p, g_p);
    match metric {
        MetricSpec::Constant(c) => offer(F::zero(), *c),
        MetricSpec::Mmi => {
            // Every information level in [0, I_P] is attained on the slice and
            // the objective is piecewise linear in it with kinks at 0, R, I_P.
            offer(F::zero(), F::zero());
            if r < i_p {
                offer(r, r);
            }
        }
        MetricSpec::Matched(v) | MetricSpec::Mismatched(v) => {
            let slice = Slice::new(q, py, v);
            let at = |b: F| slice.at(b);
            if let Some((u0, v0)) = at(F::zero()) {
                offer(u0, v0);
            }
            let (u1, v1) = match at(F::one()) {
                Some(p) => p,
                None => return (best, flagged),
            };
            offer(u1, v1);
            let (ul, vl) = if l == F::one() { (u1, v1) } else { at(l).unwrap_or((u1, v1)) };
            offer(ul, vl);
            let mut betas = Vec::new();
            // Where the information of the frontier point equals R.
            let u_of = |b: F| at(b).map_or(F::nan(), |p| p.0) - r;
            let beta_r = if u1 >= r {
                Some(increasing_root(u_of, F::zero(), F::one(), -r, u1 - r))
            } else if ul >= r {
                Some(increasing_root(u_of, F::one(), l, u1 - r, ul - r))
            } else {
                let far = F::lit(64.0).max(l * F::lit(4.0));
                match at(far) {
                    Some((uf, _)) if uf >= r => Some(increasing_root(u_of, l, far, ul - r, uf - r)),
                    _ => None,
                }
            };
            // Where the metric of the frontier point equals g(P).
            let beta_g = if vl > g_p && g_p.is_finite() {
                let v_of = |b: F| at(b).map_or(F::nan(), |p| p.1) - g_p;
                let v_zero = at(F::zero()).map_or(F::neg_infinity(), |p| p.1);
                if v_zero >= g_p {
                    Some(F::zero())
                } else {
                    Some(increasing_root(v_of, F::zero(), l, v_zero - g_p, vl - g_p))
                }
            } else {
                None
            };
            if let Some(b) = beta_r {
                betas.push(b);
            }
            if let Some(b) = beta_g {
                betas.push(b);
            }
            let b_star = beta_g.unwrap_or(l).min(l);
            betas.push(beta_r.map_or(b_star, |br| br.max(b_star)));
            for b in betas {
                if let Some((u, v)) = at(b) {
                    offer(u, v);
                }
            }
        }
    }
    (best, flagged)
}

/// `min_{P̃_X = Q, P̃_Y = P_Y} I_P̃ − g(P̃)`; `+∞` when every member of the
/// slice has `g = −∞`.
pub(crate) fn min_information_minus_metric<F: Real>(metric: &MetricSpec<F>, q: &[F], py: &[F]) -> F {
    match metric {
        MetricSpec::Mmi => F::zero(),
        MetricSpec::Constant(c) => -*c,
        MetricSpec::Matched(v) | MetricSpec::Mismatched(v) => {
            match Slice::new(q, py, v).at(F::one()) {
                Some((u, g)) => u - g,
                None => F::infinity(),
            }
        }
    }
}

fn check_metric<F: Real>(metric: &MetricSpec<F>, w: &Dmc<F>) -> Result<()> {
    if let Some(v) = metric.additive_channel() {
        if v.x_size() != w.x_size() || v.y_size() != w.y_size() {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{} metric channel", w.x_size(), w.y_size()),
                found: format!("{}x{}", v.x_size(), v.y_size()),
            });
        }
    }
    Ok(())
}

/// Randomized list decoding with a fixed list size `L`:
/// `min_P D(P‖Q×W) + min_P̃ [I_P̃ − R]_+ + L[g(P) − g(P̃) − [R − I_P̃]_+]_+`,
/// with `P_X = P̃_X = Q` and `P̃_Y = P_Y`.
pub fn randomized_list_exponent_fixed<F: Real>(query: &ExponentQuery<F>) -> Result<ExponentValue<F>> {
    query.validate()?;
    let l = match query.list {
        ListSize::Fixed(l) => F::from_u32(l).unwrap(),
        ListSize::Exponential(_) => {
            return Err(Error::InvalidParameter("expected a fixed list size".into()))
        }
    };
    let (w, q, r, metric) = (&query.channel, &query.q, query.rate, &query.metric);
    check_metric(metric, w)?;
    let (nx, ny) = (w.x_size(), w.y_size());
    let reference = JointDist::through_channel(q, w)?;
    let (_, p_star) = hinge_exponent(w, q, r, F::one());
    let flag = AtomicBool::new(false);
    let objective = |p: &JointDist<F>| -> F {
        let d = kl_slices(p.probs(), reference.probs()).max(F::zero());
        if d == F::infinity() {
            return d;
        }
        let g_p = metric.eval_raw(nx, ny, p.probs());
        let i_p = mutual_information(p);
        let py = p.y_marginal();
        let (inner, fl) = coupled_inner_fixed(metric, q.probs(), py.probs(), g_p, i_p, r, l);
        if fl {
            flag.store(true, Ordering::Relaxed);
        }
        d + inner
    };
    let m = minimize_over_joint_from(
        &objective,
        q,
        Output::Free(ny),
        &query.solver,
        &[p_star, reference.clone()],
    )?;
    Ok(ExponentValue {
        value: m.value,
        flagged: flag.load(Ordering::Relaxed),
    })
}

/// Deterministic top-`L` list decoding: `min_{P_X = Q} D(P‖Q×W) + L[I_P − R]_+`.
pub fn deterministic_list_exponent_fixed<F: Real>(
    w: &Dmc<F>,
    q: &Dist<F>,
    r: F,
    l: u32,
    cfg: &SolverConfig,
) -> Result<F> {
    check_inputs(w, q)?;
    check_rate(r)?;
    cfg.validate()?;
    if l == 0 {
        return Err(Error::InvalidParameter("list size must be at least 1".into()));
    }
    Ok(hinge_exponent(w, q, r, F::from_u32(l).unwrap()).0)
}

/// Randomized list decoding with `L(n) = e^{nλ}`:
/// `min_P min_P̃ D(P‖Q×W) + [I_P̃ − (R − λ) − (g(P̃) − g(P))]_+` over the same
/// constraint set as the fixed-list exponent.
///
/// The hinge is monotone in its argument, so the inner minimum reduces to
/// `[min_P̃ (I_P̃ − g(P̃)) + g(P) − (R − λ)]_+`.
pub fn randomized_list_exponent_exp<F: Real>(query: &ExponentQuery<F>) -> Result<ExponentValue<F>> {
    query.validate()?;
    let lambda = match query.list {
        ListSize::Exponential(l) => l,
        ListSize::Fixed(_) => {
            return Err(Error::InvalidParameter("expected an exponential list size".into()))
        }
    };
    let (w, q, metric) = (&query.channel, &query.q, &query.metric);
    check_metric(metric, w)?;
    let (nx, ny) = (w.x_size(), w.y_size());
    let shifted = query.rate - lambda;
    let reference = JointDist::through_channel(q, w)?;
    let (_, p_star) = hinge_exponent(w, q, shifted.max(F::zero()), F::one());
    let flag = AtomicBool::new(false);
    let objective = |p: &JointDist<F>| -> F {
        let d = kl_slices(p.probs(), reference.probs()).max(F::zero());
        if d == F::infinity() {
            return d;
        }
        let g_p = metric.eval_raw(nx, ny, p.probs());
        let py = p.y_marginal();
        let eb = min_information_minus_metric(metric, q.probs(), py.probs());
        let t = eb + g_p - shifted;
        if t.is_nan() {
            flag.store(true, Ordering::Relaxed);
            return F::infinity();
        }
        d + pos(t)
    };
    let m = minimize_over_joint_from(
        &objective,
        q,
        Output::Free(ny),
        &query.solver,
        &[p_star, reference.clone()],
    )?;
    Ok(ExponentValue {
        value: m.value,
        flagged: flag.load(Ordering::Relaxed),
    })
}

/// Deterministic list decoding with `L(n) = e^{nλ}`: the sphere-packing
/// exponent at `R − λ`. Below `R = λ` the rate is clamped to zero and the
/// point is flagged.
pub fn deterministic_list_exponent_exp<F: Real>(
    w: &Dmc<F>,
    q: &Dist<F>,
    r: F,
    lambda: F,
    cfg: &SolverConfig,
) -> Result<ExponentValue<F>> {
    check_inputs(w, q)?;
    check_rate(r)?;
    cfg.validate()?;
    if !(lambda >= F::zero()) || !lambda.is_finite() {
        return Err(Error::InvalidParameter("list exponent must be finite and nonnegative".into()));
    }
    let shifted = r - lambda;
    Ok(ExponentValue {
        value: sphere_packing_solution(w, q, shifted.max(F::zero())).0,
        flagged: shifted < F::zero(),
    })
}
