//! Error exponents of constant-composition random codes.
//!
//! All rates and exponents are in nats. The convex exponents (random coding,
//! sphere packing and the deterministic-list variant) are solved through
//! their one-parameter tilted-channel form; the coupled list-decoding
//! exponents go through [`minimize_over_joint`] with an exact inner solver.

mod coupling;
mod dual;
mod list;
mod solver;
mod sweep;

pub use list::{
    deterministic_list_exponent_exp, deterministic_list_exponent_fixed,
    randomized_list_exponent_exp, randomized_list_exponent_fixed, ExponentValue,
};
pub(crate) use list::min_information_minus_metric;
pub use solver::{minimize_over_joint, minimize_over_joint_from, Minimum, Output, SolverConfig};
pub use sweep::{fig1_family, sweep, write_csv, ExponentCurve, ExponentKind};


use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::MetricSpec;
use crate::prob::{Dist, Dmc, JointDist};
use crate::scalar::{log_sum_exp, pos, Real};
use dual::{DualSolver, Tilted};

/// List size: a fixed `L`, or `L(n) = ⌊e^{nλ}⌋`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ListSize<F> {
    Fixed(u32),
    Exponential(F),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentQuery<F> {
    pub channel: Dmc<F>,
    pub q: Dist<F>,
    /// Rate in nats per symbol.
    pub rate: F,
    pub metric: MetricSpec<F>,
    pub list: ListSize<F>,
    pub solver: SolverConfig,
}

impl<F: Real> ExponentQuery<F> {
    pub fn validate(&self) -> Result<()> {
        check_inputs(&self.channel, &self.q)?;
        check_rate(self.rate)?;
        self.solver.validate()?;
        match self.list {
            ListSize::Fixed(0) => Err(Error::InvalidParameter("list size must be at least 1".into())),
            ListSize::Exponential(l) if !(l >= F::zero()) || !l.is_finite() => {
                Err(Error::InvalidParameter("list exponent must be finite and nonnegative".into()))
            }
            _ => Ok(()),
        }
    }
}

pub(crate) fn check_inputs<F: Real>(w: &Dmc<F>, q: &Dist<F>) -> Result<()> {
    if q.len() != w.x_size() {
        return Err(Error::ShapeMismatch {
            expected: format!("input distribution of size {}", w.x_size()),
            found: format!("size {}", q.len()),
        });
    }
    Ok(())
}

pub(crate) fn check_rate<F: Real>(r: F) -> Result<()> {
    if !(r >= F::zero()) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("rate must be finite and nonnegative, got {r}")));
    }
    Ok(())
}

/// `min_{P_X = Q} D(P‖Q×W) + slope·[I_P − R]_+` and a minimizing joint.
pub(crate) fn hinge_exponent<F: Real>(w: &Dmc<F>, q: &Dist<F>, r: F, slope: F) -> (F, JointDist<F>) {
    let solver = DualSolver::new(w, q);
    let value = |t: &Tilted<F>| t.d + slope * pos(t.i - r);
    let t0 = solver.solve(F::zero(), None);
    if t0.i <= r {
        return (value(&t0), JointDist::from_raw(w.x_size(), w.y_size(), t0.joint));
    }
    let top = solver.solve(slope, Some(&t0.p_out));
    if top.i >= r {
        return (value(&top), JointDist::from_raw(w.x_size(), w.y_size(), top.joint));
    }
    // I(V_ρ) is nonincreasing in ρ: bracket the multiplier where it crosses R.
    let (mut lo, mut hi) = (F::zero(), slope);
    let (mut t_lo, mut t_hi) = (t0, top);
    let width = F::tight() * slope.max(F::one());
    for _ in 0..200 {
        if hi - lo <= width || (t_lo.i - r).abs() <= F::tight() {
            break;
        }
        let mid = (lo + hi) * F::lit(0.5);
        let t = solver.solve(mid, Some(&t_hi.p_out));
        if t.i > r {
            lo = mid;
            t_lo = t;
        } else {
            hi = mid;
            t_hi = t;
        }
    }
    let best = if value(&t_lo) <= value(&t_hi) { t_lo } else { t_hi };
    (value(&best), JointDist::from_raw(w.x_size(), w.y_size(), best.joint))
}

/// `E_r(R, Q) = min_{P_X = Q} D(P‖Q×W) + [I_P − R]_+`.
pub fn random_coding_exponent<F: Real>(w: &Dmc<F>, q: &Dist<F>, r: F, cfg: &SolverConfig) -> Result<F> {
    check_inputs(w, q)?;
    check_rate(r)?;
    cfg.validate()?;
    Ok(hinge_exponent(w, q, r, F::one()).0)
}

/// `E_sp(R, Q) = min { D(P‖Q×W) : P_X = Q, I_P ≤ R }`, `+∞` when no joint
/// absolutely continuous with respect to `Q × W` has information at most `R`.
pub fn sphere_packing_exponent<F: Real>(w: &Dmc<F>, q: &Dist<F>, r: F, cfg: &SolverConfig) -> Result<F> {
    check_inputs(w, q)?;
    check_rate(r)?;
    cfg.validate()?;
    Ok(sphere_packing_solution(w, q, r).0)
}

pub(crate) fn sphere_packing_solution<F: Real>(w: &Dmc<F>, q: &Dist<F>, r: F) -> (F, Option<JointDist<F>>) {
    let (nx, ny) = (w.x_size(), w.y_size());
    let solver = DualSolver::new(w, q);
    let t0 = solver.solve(F::zero(), None);
    if t0.i <= r {
        return (t0.d, Some(JointDist::from_raw(nx, ny, t0.joint)));
    }
    let i_min = solver.min_information();
    if r < i_min - F::tight() {
        return (F::infinity(), None);
    }
    if r <= F::tight() && i_min == F::zero() {
        return independent_sphere_packing(w, q);
    }
    let cap = F::lit(1e6);
    let (mut lo, mut hi) = (F::zero(), F::one());
    let mut t_hi = solver.solve(hi, Some(&t0.p_out));
    while t_hi.i > r {
        if hi >= cap {
            // R sits at the information floor; the multiplier diverges.
            return (t_hi.d, Some(JointDist::from_raw(nx, ny, t_hi.joint)));
        }
        lo = hi;
        hi = hi + hi;
        t_hi = solver.solve(hi, Some(&t_hi.p_out));
    }
    for _ in 0..200 {
        if hi - lo <= F::tight() * hi {
            break;
        }
        let mid = if lo > F::zero() && hi > lo * F::lit(4.0) {
            (lo * hi).sqrt()
        } else {
            (lo + hi) * F::lit(0.5)
        };
        let t = solver.solve(mid, Some(&t_hi.p_out));
        if t.i > r {
            lo = mid;
        } else {
            hi = mid;
            let done = (r - t.i).abs() <= F::tight();
            t_hi = t;
            if done {
                break;
            }
        }
    }
    (t_hi.d, Some(JointDist::from_raw(nx, ny, t_hi.joint)))
}

/// `E_sp(0)`: the output law is forced to be independent of the input, and
/// `min_{P_Y} Σ_x Q(x) D(P_Y‖W(·|x))` is attained at the normalized
/// geometric mean of the rows.
fn independent_sphere_packing<F: Real>(w: &Dmc<F>, q: &Dist<F>) -> (F, Option<JointDist<F>>) {
    let (nx, ny) = (w.x_size(), w.y_size());
    let log_mean: Vec<F> = (0..ny)
        .map(|y| {
            (0..nx)
                .filter(|&x| q.probs()[x] > F::zero())
                .fold(F::zero(), |acc, x| {
                    let v = w.get(x, y);
                    if v > F::zero() {
                        acc + q.probs()[x] * v.ln()
                    } else {
                        F::neg_infinity()
                    }
                })
        })
        .collect();
    let lse = log_sum_exp(log_mean.iter().copied());
    let py: Vec<F> = log_mean.iter().map(|&l| (l - lse).exp()).collect();
    let joint = (0..nx * ny).map(|i| q.probs()[i / ny] * py[i % ny]).collect();
    ((-lse).max(F::zero()), Some(JointDist::from_raw(nx, ny, joint)))
}

/// Smallest rate at which the sphere-packing and random-coding exponents
/// agree within `cfg.tolerance`, located by bisection on `[0, I(Q;W)]`.
pub fn critical_rate<F: Real>(w: &Dmc<F>, q: &Dist<F>, cfg: &SolverConfig) -> Result<F> {
    check_inputs(w, q)?;
    cfg.validate()?;
    let tol = F::lit(cfg.tolerance);
    let capacity_q = DualSolver::new(w, q).solve(F::zero(), None).i;
    let gap = |r: F| -> F {
        let sp = sphere_packing_solution(w, q, r).0;
        let rc = hinge_exponent(w, q, r, F::one()).0;
        if sp == F::infinity() {
            F::infinity()
        } else {
            sp - rc
        }
    };
    if gap(capacity_q) > tol {
        return Err(Error::Solver("exponents do not meet below I(Q;W)".into()));
    }
    if gap(F::zero()) <= tol {
        return Ok(F::zero());
    }
    let (mut lo, mut hi) = (F::zero(), capacity_q);
    for _ in 0..200 {
        if hi - lo <= F::tight() * capacity_q.max(F::one()) {
            break;
        }
        let mid = (lo + hi) * F::lit(0.5);
        if gap(mid) > tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::binary_divergence;

    fn h2(p: f64) -> f64 {
        -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
    }

    /// Inverse of the binary entropy on [0, ½].
    fn h2_inv(h: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 0.5);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if h2(mid) < h {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn bsc_sphere_packing_matches_binary_divergence() {
        let p = 0.1;
        let w = Dmc::bsc(p).unwrap();
        let q = Dist::uniform(2).unwrap();
        let cfg = SolverConfig::default();
        for r in [0.05, 0.1, 0.2, 0.3] {
            let delta = h2_inv(2f64.ln() - r);
            let want = binary_divergence(delta, p);
            let got = sphere_packing_exponent(&w, &q, r, &cfg).unwrap();
            assert!((got - want).abs() < 1e-9, "R={r}: {got} vs {want}");
        }
    }

    #[test]
    fn noiseless_channel() {
        let w = Dmc::noiseless(2).unwrap();
        let q = Dist::uniform(2).unwrap();
        let cfg = SolverConfig::default();
        let ln2 = 2f64.ln();
        for r in [0.0, 0.2, 0.5] {
            let er = random_coding_exponent(&w, &q, r, &cfg).unwrap();
            assert!((er - (ln2 - r)).abs() < 1e-9);
            assert_eq!(sphere_packing_exponent(&w, &q, r, &cfg).unwrap(), f64::INFINITY);
        }
        assert_eq!(sphere_packing_exponent(&w, &q, 0.7, &cfg).unwrap(), 0.0);
        let r0 = critical_rate(&w, &q, &cfg).unwrap();
        assert!((r0 - ln2).abs() < 1e-9, "{r0}");
    }

    #[test]
    fn above_capacity_everything_vanishes() {
        let w = Dmc::bsc(0.1).unwrap();
        let q = Dist::uniform(2).unwrap();
        let cfg = SolverConfig::default();
        assert_eq!(random_coding_exponent(&w, &q, 0.4, &cfg).unwrap(), 0.0);
        assert_eq!(sphere_packing_exponent(&w, &q, 0.4, &cfg).unwrap(), 0.0);
        assert!(random_coding_exponent(&w, &q, -0.1, &cfg).is_err());
    }

    #[test]
    fn bsc_critical_rate_is_the_tilted_information() {
        let w = Dmc::bsc(0.1).unwrap();
        let q = Dist::uniform(2).unwrap();
        let r0 = critical_rate(&w, &q, &SolverConfig::default()).unwrap();
        let want = 2f64.ln() - h2(0.25);
        assert!((r0 - want).abs() < 1e-4, "{r0} vs {want}");
    }
}
