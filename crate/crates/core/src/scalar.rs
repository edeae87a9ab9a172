//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All quantities are natural-log based (nats). `+∞` and `-∞` are carried by
//! the floating-point type itself; the helpers below pin down how they combine
//! with the hinge `[t]_+` that appears throughout the exponent formulas.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used by the distribution, metric and exponent code.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Tolerance used when validating that a probability vector sums to one.
    fn mass_tol() -> Self;

    /// Convergence threshold for iterative solvers, a small multiple of machine epsilon.
    fn tight() -> Self {
        Self::epsilon() * Self::lit(64.0)
    }

    /// Converts an `f64` literal. Panics only if the value is unrepresentable,
    /// which cannot happen for finite literals and the two supported types.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn mass_tol() -> f64 {
        1e-12
    }
}

impl Real for f32 {
    fn mass_tol() -> f32 {
        1e-5
    }
}

/// The hinge `[t]_+ = max(t, 0)`.
///
/// `+∞` maps to `+∞`, `-∞` maps to `0`, and NaN propagates so that an
/// indeterminate `∞ - ∞` upstream is never silently clipped to zero.
pub fn pos<F: Real>(t: F) -> F {
    if t.is_nan() {
        t
    } else if t > F::zero() {
        t
    } else {
        F::zero()
    }
}

/// `x · ln x` with the convention `0 · ln 0 = 0`.
pub fn xlogx<F: Real>(x: F) -> F {
    if x <= F::zero() {
        F::zero()
    } else {
        x * x.ln()
    }
}

/// `x · ln(x / y)` with `0 · ln(0 / y) = 0` (including `y = 0`) and `+∞` when
/// `x > 0 = y`.
pub fn xlogxy<F: Real>(x: F, y: F) -> F {
    if x <= F::zero() {
        F::zero()
    } else if y <= F::zero() {
        F::infinity()
    } else {
        x * (x / y).ln()
    }
}

/// Numerically stable `ln Σ exp(a_i)`; `-∞` for an empty or all `-∞` input.
pub fn log_sum_exp<F: Real>(values: impl IntoIterator<Item = F> + Clone) -> F {
    let max = values
        .clone()
        .into_iter()
        .fold(F::neg_infinity(), |m, v| if v > m { v } else { m });
    if max == F::neg_infinity() {
        return max;
    }
    if max == F::infinity() {
        return max;
    }
    let s: F = values.into_iter().map(|v| (v - max).exp()).sum();
    max + s.ln()
}

/// Converts a quantity in nats to the requested logarithm base.
pub fn to_base<F: Real>(nats: F, log_base: F) -> F {
    if log_base == F::one().exp() {
        nats
    } else {
        nats / log_base.ln()
    }
}

/// Converts a quantity expressed in `log_base` units to nats.
pub fn from_base<F: Real>(value: F, log_base: F) -> F {
    if log_base == F::one().exp() {
        value
    } else {
        value * log_base.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extended_arithmetic_contracts() {
        let inf = f64::INFINITY;
        assert_eq!(1.0 + inf, inf);
        assert_eq!(inf.min(3.0), 3.0);
        assert_eq!(pos(inf), inf);
        assert_eq!(pos(-inf), 0.0);
        assert_eq!(pos(-0.5), 0.0);
        assert_eq!(pos(0.25), 0.25);
        assert!(pos(inf - inf).is_nan());
        assert_eq!(2.0 * pos(inf), inf);
    }

    #[test]
    fn zero_log_conventions() {
        assert_eq!(xlogx(0.0_f64), 0.0);
        assert_eq!(xlogxy(0.0_f64, 0.0), 0.0);
        assert_eq!(xlogxy(0.0_f64, 0.3), 0.0);
        assert_eq!(xlogxy(0.2_f64, 0.0), f64::INFINITY);
    }

    #[test]
    fn lse_handles_infinities() {
        let v = [f64::NEG_INFINITY, f64::NEG_INFINITY];
        assert_eq!(log_sum_exp(v.iter().copied()), f64::NEG_INFINITY);
        let w = [0.0_f64, 0.0];
        assert!((log_sum_exp(w.iter().copied()) - 2f64.ln()).abs() < 1e-15);
        let big = [1000.0_f64, 1000.0];
        assert!((log_sum_exp(big.iter().copied()) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn base_conversion_round_trips() {
        let x = 0.7_f64;
        assert!((from_base(to_base(x, 2.0), 2.0) - x).abs() < 1e-15);
        assert_eq!(to_base(x, std::f64::consts::E), x);
        assert!((to_base(2f64.ln(), 2.0) - 1.0).abs() < 1e-15);
    }
}
