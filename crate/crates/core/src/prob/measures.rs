//! Entropy, relative entropy and mutual information in nats.

use super::{Dist, Dmc, JointDist};
use crate::error::{Error, Result};
use crate::scalar::{xlogx, xlogxy, Real};

/// Shape-tagged probability table, so `kl` accepts both marginals and joints.
pub trait Probabilities<F> {
    fn shape(&self) -> (usize, usize);
    fn values(&self) -> &[F];
}

impl<F: Real> Probabilities<F> for Dist<F> {
    fn shape(&self) -> (usize, usize) {
        (1, self.len())
    }
    fn values(&self) -> &[F] {
        self.probs()
    }
}

impl<F: Real> Probabilities<F> for JointDist<F> {
    fn shape(&self) -> (usize, usize) {
        (self.x_size(), self.y_size())
    }
    fn values(&self) -> &[F] {
        self.probs()
    }
}

pub(crate) fn entropy_of<F: Real>(p: &[F]) -> F {
    -p.iter().map(|&v| xlogx(v)).sum::<F>()
}

pub(crate) fn kl_slices<F: Real>(p: &[F], q: &[F]) -> F {
    p.iter().zip(q).map(|(&a, &b)| xlogxy(a, b)).sum()
}

pub fn entropy<F: Real>(p: &Dist<F>) -> F {
    entropy_of(p.probs())
}

pub fn joint_entropy<F: Real>(p: &JointDist<F>) -> F {
    entropy_of(p.probs())
}

/// `D(p‖q)`; `+∞` when `p` is not absolutely continuous with respect to `q`.
pub fn kl<F: Real, P: Probabilities<F>>(p: &P, q: &P) -> Result<F> {
    if p.shape() != q.shape() {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?}", p.shape()),
            found: format!("{:?}", q.shape()),
        });
    }
    // Rounding can push a tiny sum below zero.
    Ok(kl_slices(p.values(), q.values()).max(F::zero()))
}

/// `I_P(X:Y) = H(X) + H(Y) − H(X,Y)`.
pub fn mutual_information<F: Real>(p: &JointDist<F>) -> F {
    let i = entropy(&p.x_marginal()) + entropy(&p.y_marginal()) - joint_entropy(p);
    i.max(F::zero())
}

/// `D(P_XY ‖ P_X × P_Y)`, an independent code path for the same quantity.
pub fn mutual_information_via_kl<F: Real>(p: &JointDist<F>) -> F {
    kl_slices(p.probs(), p.independent_coupling().probs()).max(F::zero())
}

/// Binary divergence `d(r‖p)` with the usual limit conventions.
pub fn binary_divergence<F: Real>(r: F, p: F) -> F {
    let one = F::one();
    (xlogxy(r, p) + xlogxy(one - r, one - p)).max(F::zero())
}

/// `D(P ‖ Q × W)`.
pub fn kl_to_channel<F: Real>(p: &JointDist<F>, q: &Dist<F>, w: &Dmc<F>) -> Result<F> {
    if p.x_size() != w.x_size() || p.y_size() != w.y_size() {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", w.x_size(), w.y_size()),
            found: format!("{}x{}", p.x_size(), p.y_size()),
        });
    }
    let reference = JointDist::through_channel(q, w)?;
    kl(p, &reference)
}
