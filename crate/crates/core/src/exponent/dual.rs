//! Parametric (tilted-channel) solutions of the convex exponent problems.
//!
//! For `ρ ≥ 0`, `min_V D(V‖W|Q) + ρ I(Q,V)` equals the minimum over output
//! distributions `P'` of `-(1+ρ) Σ_x Q(x) ln Σ_y W(y|x)^{1/(1+ρ)} P'(y)^{ρ/(1+ρ)}`,
//! with optimal `V(y|x) ∝ W(y|x)^{1/(1+ρ)} P'(y)^{ρ/(1+ρ)}`. Sweeping `ρ`
//! traces the curve `(I, D)` of the constrained problems, and `I` is
//! nonincreasing in `ρ`.

use crate::prob::{Dist, Dmc};
use crate::scalar::{log_sum_exp, xlogxy, Real};

/// The optimal joint `Q(x) V_ρ(y|x)` for one multiplier, with its divergence
/// from `Q × W` and its mutual information.
#[derive(Debug, Clone)]
pub(crate) struct Tilted<F> {
    pub joint: Vec<F>,
    pub d: F,
    pub i: F,
    /// Converged output distribution, reused to warm-start nearby multipliers.
    pub p_out: Vec<F>,
}

pub(crate) struct DualSolver<'a, F> {
    q: &'a [F],
    w: &'a Dmc<F>,
    log_w: Vec<F>,
}

impl<'a, F: Real> DualSolver<'a, F> {
    pub fn new(w: &'a Dmc<F>, q: &'a Dist<F>) -> Self {
        let log_w = w
            .matrix()
            .iter()
            .map(|&v| if v > F::zero() { v.ln() } else { F::neg_infinity() })
            .collect();
        Self { q: q.probs(), w, log_w }
    }

    fn nx(&self) -> usize {
        self.w.x_size()
    }

    fn ny(&self) -> usize {
        self.w.y_size()
    }

    /// `Σ_x Q(x) W(·|x)`, the multiplier-zero output.
    pub fn output(&self) -> Vec<F> {
        let ny = self.ny();
        let mut p = vec![F::zero(); ny];
        for x in 0..self.nx() {
            for y in 0..ny {
                p[y] = p[y] + self.q[x] * self.w.get(x, y);
            }
        }
        p
    }

    /// Conditional rows and the per-row log normalizers for a given `P'`.
    fn conditional(&self, s: F, p: &[F]) -> (Vec<F>, Vec<F>) {
        let (nx, ny) = (self.nx(), self.ny());
        let one = F::one();
        let mut v = vec![F::zero(); nx * ny];
        let mut logz = vec![F::zero(); nx];
        for x in 0..nx {
            let terms: Vec<F> = (0..ny)
                .map(|y| {
                    let lw = self.log_w[x * ny + y];
                    if lw == F::neg_infinity() || p[y] <= F::zero() {
                        F::neg_infinity()
                    } else {
                        s * lw + (one - s) * p[y].ln()
                    }
                })
                .collect();
            let lz = log_sum_exp(terms.iter().copied());
            logz[x] = lz;
            for y in 0..ny {
                v[x * ny + y] = if terms[y] == F::neg_infinity() {
                    F::zero()
                } else {
                    (terms[y] - lz).exp()
                };
            }
        }
        (v, logz)
    }

    fn potential(&self, logz: &[F], rho: F) -> F {
        let mut acc = F::zero();
        for (x, &lz) in logz.iter().enumerate() {
            if self.q[x] > F::zero() {
                acc = acc + self.q[x] * lz;
            }
        }
        -(F::one() + rho) * acc
    }

    fn push_forward(&self, v: &[F]) -> Vec<F> {
        let ny = self.ny();
        let mut out = vec![F::zero(); ny];
        for x in 0..self.nx() {
            for y in 0..ny {
                out[y] = out[y] + self.q[x] * v[x * ny + y];
            }
        }
        out
    }

    /// Solves the multiplier-`rho` problem, starting from `warm` when given.
    pub fn solve(&self, rho: F, warm: Option<&[F]>) -> Tilted<F> {
        let one = F::one();
        let s = one / (one + rho);
        let mut p: Vec<F> = warm.map_or_else(|| self.output(), <[F]>::to_vec);
        let tol = F::tight();
        let over = F::lit(1.8);
        for _ in 0..50_000 {
            let (v, _) = self.conditional(s, &p);
            let t = self.push_forward(&v);
            let delta = p
                .iter()
                .zip(&t)
                .map(|(&a, &b)| (a - b).abs())
                .fold(F::zero(), F::max);
            if delta <= tol {
                p = t;
                break;
            }
            // Over-relaxed step P ∝ P (T/P)^η, kept only when it beats the plain map.
            let mut cand: Vec<F> = p
                .iter()
                .zip(&t)
                .map(|(&a, &b)| {
                    if a > F::zero() && b > F::zero() {
                        a * (b / a).powf(over)
                    } else {
                        b
                    }
                })
                .collect();
            let cs: F = cand.iter().copied().sum();
            cand.iter_mut().for_each(|c| *c = *c / cs);
            let phi_t = self.potential(&self.conditional(s, &t).1, rho);
            let phi_c = self.potential(&self.conditional(s, &cand).1, rho);
            p = if phi_c < phi_t { cand } else { t };
        }
        let (v, _) = self.conditional(s, &p);
        self.evaluate(&v, p)
    }

    fn evaluate(&self, v: &[F], p_out: Vec<F>) -> Tilted<F> {
        let (nx, ny) = (self.nx(), self.ny());
        let py = self.push_forward(v);
        let mut joint = vec![F::zero(); nx * ny];
        let mut d = F::zero();
        let mut i = F::zero();
        for x in 0..nx {
            for y in 0..ny {
                let j = self.q[x] * v[x * ny + y];
                joint[x * ny + y] = j;
                d = d + self.q[x] * xlogxy(v[x * ny + y], self.w.get(x, y));
                i = i + self.q[x] * xlogxy(v[x * ny + y], py[y]);
            }
        }
        Tilted {
            joint,
            d: d.max(F::zero()),
            i: i.max(F::zero()),
            p_out,
        }
    }

    /// The smallest mutual information among conditionals absolutely
    /// continuous with respect to `W`:
    /// `-max_{P'} Σ_x Q(x) ln P'(supp W(·|x))`, solved by EM.
    pub fn min_information(&self) -> F {
        let (nx, ny) = (self.nx(), self.ny());
        let mut p = vec![F::one() / F::from_usize(ny).unwrap(); ny];
        let mass = |p: &[F], x: usize| -> F {
            (0..ny)
                .filter(|&y| self.w.get(x, y) > F::zero())
                .map(|y| p[y])
                .sum()
        };
        for _ in 0..100_000 {
            let mut next = vec![F::zero(); ny];
            for x in 0..nx {
                if self.q[x] <= F::zero() {
                    continue;
                }
                let m = mass(&p, x);
                for y in 0..ny {
                    if self.w.get(x, y) > F::zero() {
                        next[y] = next[y] + self.q[x] * p[y] / m;
                    }
                }
            }
            let delta = p
                .iter()
                .zip(&next)
                .map(|(&a, &b)| (a - b).abs())
                .fold(F::zero(), F::max);
            p = next;
            if delta <= F::tight() {
                break;
            }
        }
        let mut acc = F::zero();
        for x in 0..nx {
            if self.q[x] > F::zero() {
                acc = acc + self.q[x] * mass(&p, x).ln();
            }
        }
        (-acc).max(F::zero())
    }
}
