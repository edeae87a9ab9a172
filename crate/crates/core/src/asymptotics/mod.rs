//! Scalar tools for the large-n analysis of the random-coding ensemble.

mod binomial;

pub use binomial::{
    binomial_tail_prob, integral_by_quadrature, log_integral, log_pmf, log_tail, trial_count, MAX_TRIALS,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::{min_information_minus_metric, SolverConfig};
use crate::metric::{metric_gap, MetricSpec};
use crate::prob::{mutual_information, Dist, JointDist};
use crate::scalar::{pos, Real};

/// Parameters of `∫_0^∞ e^{−nLθ} P(N_n ≥ e^{n(C−θ)}) dθ` with
/// `N_n ~ Bin(⌊e^{nA}⌋, e^{−nB})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralParams<F> {
    pub a: F,
    pub b: F,
    pub c: F,
    pub l: u32,
    pub n: u32,
}

impl<F: Real> IntegralParams<F> {
    pub fn validate(&self) -> Result<()> {
        if !(self.a >= F::zero() && self.b >= F::zero()) || !self.c.is_finite() {
            return Err(Error::InvalidParameter("need A, B ≥ 0 and finite C".into()));
        }
        if self.l == 0 || self.n == 0 {
            return Err(Error::InvalidParameter("need L ≥ 1 and n ≥ 1".into()));
        }
        Ok(())
    }
}

/// Inputs of the binomial-tail exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailQuery<F> {
    pub rate: F,
    pub information: F,
    pub threshold: F,
}

/// Unique root in `[0, 1]` of `ξ^L + ξ − 1`, for `L ≥ 1`.
pub fn xi_star<F: Real>(l: F) -> Result<F> {
    if !(l >= F::one()) {
        return Err(Error::InvalidParameter(format!("L must be at least 1, got {l}")));
    }
    let (mut lo, mut hi) = (F::zero(), F::one());
    let tol = F::lit(1e-14).max(F::epsilon());
    while hi - lo > tol {
        let mid = (lo + hi) * F::lit(0.5);
        if mid == lo || mid == hi {
            break;
        }
        if mid.powf(l) + mid - F::one() < F::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * F::lit(0.5))
}

/// Principal branch of the Lambert W function on `[0, ∞)`, by Halley's method.
pub fn lambert_w0<F: Real>(x: F) -> Result<F> {
    if !(x >= F::zero()) {
        return Err(Error::InvalidParameter(format!("lambert_w0 needs x ≥ 0, got {x}")));
    }
    if x == F::zero() {
        return Ok(F::zero());
    }
    if x == F::infinity() {
        return Ok(x);
    }
    let two = F::lit(2.0);
    let mut w = x.ln_1p();
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + F::one();
        let step = f / (ew * wp1 - (w + two) * f / (two * wp1));
        w = w - step;
        if step.abs() <= F::lit(1e-15).max(F::epsilon()) * w.abs().max(F::one()) {
            break;
        }
    }
    Ok(w)
}

/// `[I − R]_+` when `[R − I]_+ ≥ C`, else `+∞`.
pub fn binomial_tail_exponent<F: Real>(q: &TailQuery<F>) -> F {
    if pos(q.rate - q.information) >= q.threshold {
        pos(q.information - q.rate)
    } else {
        F::infinity()
    }
}

/// `[B − A]_+ + L[C − [A − B]_+]_+`.
pub fn integral_exponent_closed_form<F: Real>(p: &IntegralParams<F>) -> F {
    let l = F::from_u32(p.l).unwrap();
    pos(p.b - p.a) + l * pos(p.c - pos(p.a - p.b))
}

/// `−(1/n) ln ∫_0^∞ e^{−nLθ} P(N_n ≥ e^{n(C−θ)}) dθ` at finite `n`, from exact
/// binomial probabilities. Refuses trial counts `⌊e^{nA}⌋ > 2^63 − 1`.
pub fn integral_exponent_numeric(p: &IntegralParams<f64>) -> Result<f64> {
    p.validate()?;
    let li = log_integral(p.a, p.b, p.c, p.l, p.n)?;
    Ok(-li / p.n as f64)
}

/// `[I_P̃ − R]_+ + L[g(P) − g(P̃) − [R − I_P̃]_+]_+`.
pub fn e_hat_a<F: Real>(
    p: &JointDist<F>,
    p_tilde: &JointDist<F>,
    r: F,
    l: u32,
    g: &MetricSpec<F>,
) -> Result<F> {
    let gap = metric_gap(g, p, p_tilde)?;
    let i_t = mutual_information(p_tilde);
    let l = F::from_u32(l).unwrap();
    Ok(pos(i_t - r) + l * pos(gap - pos(r - i_t)))
}

/// `min { I_P̃ − g(P̃) : P̃_X = q, P̃_Y = p_y }`.
///
/// For additive metrics the minimizer is the I-projection of
/// `q(x) p_y(y) V(y|x)` onto the marginal slice, found by matrix scaling.
pub fn e_hat_b<F: Real>(q: &Dist<F>, p_y: &Dist<F>, g: &MetricSpec<F>, cfg: &SolverConfig) -> Result<F> {
    cfg.validate()?;
    if let Some(v) = g.additive_channel() {
        if v.x_size() != q.len() || v.y_size() != p_y.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", v.x_size(), v.y_size()),
                found: format!("{}x{}", q.len(), p_y.len()),
            });
        }
    }
    Ok(min_information_minus_metric(g, q.probs(), p_y.probs()))
}

/// Both sides of `E[X^L] ≤ min_ξ ξ^{L−1} E[X] + P(X > ξ)` for a discrete `X`
/// on `[0, 1]`, the minimum taken over a uniform ξ grid of spacing `1e-4`.
pub fn verify_xl_lemma<F: Real>(atoms: &[F], weights: &[F], l: u32) -> Result<(F, F)> {
    if atoms.len() != weights.len() || atoms.is_empty() {
        return Err(Error::ShapeMismatch {
            expected: "matching nonempty atoms and weights".into(),
            found: format!("{} atoms, {} weights", atoms.len(), weights.len()),
        });
    }
    if atoms.iter().any(|&a| !(a >= F::zero() && a <= F::one())) {
        return Err(Error::InvalidParameter("atoms must lie in [0, 1]".into()));
    }
    let w = Dist::new(weights.to_vec())?;
    if l == 0 {
        return Err(Error::InvalidParameter("L must be at least 1".into()));
    }
    let li = l as i32;
    let lhs: F = atoms.iter().zip(w.probs()).map(|(&a, &p)| p * a.powi(li)).sum();
    let mean: F = atoms.iter().zip(w.probs()).map(|(&a, &p)| p * a).sum();
    let steps = 10_000;
    let mut rhs = F::infinity();
    for k in 0..=steps {
        let xi = F::from_u32(k).unwrap() / F::from_u32(steps).unwrap();
        let above: F = atoms
            .iter()
            .zip(w.probs())
            .filter(|(&a, _)| a > xi)
            .map(|(_, &p)| p)
            .sum();
        let v = xi.powi(li - 1) * mean + above;
        if v < rhs {
            rhs = v;
        }
    }
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Dmc;

    #[test]
    fn xi_star_examples() {
        assert!((xi_star(1.0_f64).unwrap() - 0.5).abs() < 1e-14);
        assert!((xi_star(2.0_f64).unwrap() - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-14);
        let x = xi_star(10.0_f64).unwrap();
        assert!(x >= 1.0 - 10f64.ln() / 10.0 && x <= 10.0 / 11.0);
        assert!(xi_star(0.5_f64).is_err());
        let x32 = xi_star(2.0_f32).unwrap();
        assert!((x32 - 0.618_034).abs() < 1e-6);
    }

    #[test]
    fn lambert_examples() {
        assert_eq!(lambert_w0(0.0_f64).unwrap(), 0.0);
        assert!((lambert_w0(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-14);
        assert!(lambert_w0(10.0_f64).unwrap() <= 10f64.ln());
        let w = lambert_w0(1e6_f64).unwrap();
        assert!((w * w.exp() - 1e6).abs() < 1e-6);
        assert!(lambert_w0(-1.0_f64).is_err());
    }

    #[test]
    fn tail_exponent_examples() {
        let t = |rate, information, threshold| binomial_tail_exponent(&TailQuery { rate, information, threshold });
        assert_eq!(t(0.5, 0.2, 0.1), 0.0);
        assert!((t(0.2_f64, 0.5, 0.0) - 0.3).abs() < 1e-15);
        assert_eq!(t(0.2, 0.5, 0.1), f64::INFINITY);
    }

    #[test]
    fn closed_form_examples() {
        let cf = |a, b, c, l| integral_exponent_closed_form(&IntegralParams { a, b, c, l, n: 1 });
        assert_eq!(cf(1.0, 0.0, 0.5, 2), 0.0);
        assert!((cf(0.2_f64, 0.5, 0.3, 1) - 0.6).abs() < 1e-15);
        assert!((cf(0.0_f64, 0.0, 0.4, 3) - 1.2).abs() < 1e-15);
    }

    #[test]
    fn numeric_integral_trivial_tail() {
        let p = IntegralParams { a: 0.0, b: 0.0, c: -1.0, l: 2, n: 50 };
        let e = integral_exponent_numeric(&p).unwrap();
        assert!((e - (100f64).ln() / 50.0).abs() < 1e-12);
    }

    #[test]
    fn e_hat_a_examples() {
        let w = Dmc::<f64>::bsc(0.1).unwrap();
        let q = Dist::uniform(2).unwrap();
        let p = JointDist::through_channel(&q, &w).unwrap();
        let g = MetricSpec::Matched(w);
        let v = e_hat_a(&p, &p, 0.1, 3, &g).unwrap();
        assert!((v - (mutual_information(&p) - 0.1)).abs() < 1e-15);
        let c = e_hat_a(&p, &p.independent_coupling(), 0.1, 3, &MetricSpec::Constant(0.0)).unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn e_hat_b_examples() {
        let q = Dist::uniform(2).unwrap();
        let py = Dist::new(vec![0.3, 0.7]).unwrap();
        let cfg = SolverConfig::default();
        assert_eq!(e_hat_b(&q, &py, &MetricSpec::Mmi, &cfg).unwrap(), 0.0);
        assert_eq!(e_hat_b(&q, &py, &MetricSpec::Constant(0.25), &cfg).unwrap(), -0.25);
    }

    #[test]
    fn xl_lemma_degenerate() {
        let (l, r) = verify_xl_lemma(&[1.0_f64], &[1.0], 3).unwrap();
        assert_eq!(l, 1.0);
        assert!(l <= r + 1e-12);
        let (l, r) = verify_xl_lemma(&[0.0_f64], &[1.0], 3).unwrap();
        assert_eq!(l, 0.0);
        assert!(r >= 0.0);
        assert!(verify_xl_lemma(&[1.5_f64], &[1.0], 2).is_err());
    }
}
