//! Finite-alphabet distributions, joint distributions and memoryless channels.
//!
//! Everything here is immutable after construction. Joint distributions and
//! channel matrices are stored row-major with the input symbol `x` indexing
//! rows and the output symbol `y` indexing columns.

mod measures;
mod parse;
mod types;

pub use measures::{
    binary_divergence, entropy, joint_entropy, kl, kl_to_channel, mutual_information,
    mutual_information_via_kl, Probabilities,
};
pub(crate) use measures::kl_slices;
pub use parse::{parse_channel, parse_dist, ChannelJson};
pub use types::{enumerate_joint_types, quantize_to_type, JointTypeIter, TypeDist};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    size: usize,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::EmptyAlphabet);
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

fn check_probs<F: Real>(probs: &[F]) -> Result<()> {
    let mut sum = F::zero();
    for (index, &p) in probs.iter().enumerate() {
        if !p.is_finite() {
            return Err(Error::NonFinite { index });
        }
        if p < F::zero() {
            return Err(Error::NegativeProbability {
                index,
                value: p.to_f64_lossy(),
            });
        }
        sum = sum + p;
    }
    if (sum - F::one()).abs() > F::mass_tol() {
        return Err(Error::NotNormalized {
            sum: sum.to_f64_lossy(),
        });
    }
    Ok(())
}

/// A probability vector on `{0, .., size-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dist<F> {
    probs: Vec<F>,
}

impl<F: Real> Dist<F> {
    pub fn new(probs: Vec<F>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        check_probs(&probs)?;
        Ok(Self { probs })
    }

    pub fn uniform(size: usize) -> Result<Self> {
        Alphabet::new(size)?;
        let p = F::one() / F::from_usize(size).unwrap();
        Ok(Self {
            probs: vec![p; size],
        })
    }

    pub fn point_mass(size: usize, index: usize) -> Result<Self> {
        Alphabet::new(size)?;
        if index >= size {
            return Err(Error::InvalidParameter(format!(
                "index {index} outside alphabet of size {size}"
            )));
        }
        let mut probs = vec![F::zero(); size];
        probs[index] = F::one();
        Ok(Self { probs })
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet {
            size: self.probs.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn probs(&self) -> &[F] {
        &self.probs
    }

    pub fn support_size(&self) -> usize {
        self.probs.iter().filter(|&&p| p > F::zero()).count()
    }

    pub fn cast<G: Real>(&self) -> Dist<G> {
        Dist {
            probs: self.probs.iter().map(|&p| G::lit(p.to_f64_lossy())).collect(),
        }
    }
}

/// A joint distribution on `X × Y`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDist<F> {
    nx: usize,
    ny: usize,
    probs: Vec<F>,
}

impl<F: Real> JointDist<F> {
    pub fn new(nx: usize, ny: usize, probs: Vec<F>) -> Result<Self> {
        Alphabet::new(nx)?;
        Alphabet::new(ny)?;
        if probs.len() != nx * ny {
            return Err(Error::ShapeMismatch {
                expected: format!("{} entries", nx * ny),
                found: format!("{} entries", probs.len()),
            });
        }
        check_probs(&probs)?;
        Ok(Self { nx, ny, probs })
    }

    pub fn from_rows(rows: &[Vec<F>]) -> Result<Self> {
        let nx = rows.len();
        let ny = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ny) {
            return Err(Error::ShapeMismatch {
                expected: format!("rows of length {ny}"),
                found: "ragged rows".into(),
            });
        }
        Self::new(nx, ny, rows.concat())
    }

    /// Skips validation; callers guarantee a nonnegative unit-mass table up to rounding.
    pub(crate) fn from_raw(nx: usize, ny: usize, probs: Vec<F>) -> Self {
        debug_assert_eq!(probs.len(), nx * ny);
        Self { nx, ny, probs }
    }

    /// The product `Q × P_Y`.
    pub fn product(px: &Dist<F>, py: &Dist<F>) -> Self {
        let mut probs = Vec::with_capacity(px.len() * py.len());
        for &a in px.probs() {
            for &b in py.probs() {
                probs.push(a * b);
            }
        }
        Self::from_raw(px.len(), py.len(), probs)
    }

    /// The joint `Q(x) W(y|x)` induced by feeding `q` into `w`.
    pub fn through_channel(q: &Dist<F>, w: &Dmc<F>) -> Result<Self> {
        if q.len() != w.x_size() {
            return Err(Error::ShapeMismatch {
                expected: format!("input distribution of size {}", w.x_size()),
                found: format!("size {}", q.len()),
            });
        }
        let mut probs = Vec::with_capacity(w.x_size() * w.y_size());
        for (x, &qx) in q.probs().iter().enumerate() {
            probs.extend(w.row(x).iter().map(|&v| qx * v));
        }
        Ok(Self::from_raw(w.x_size(), w.y_size(), probs))
    }

    pub fn x_size(&self) -> usize {
        self.nx
    }

    pub fn y_size(&self) -> usize {
        self.ny
    }

    pub fn probs(&self) -> &[F] {
        &self.probs
    }

    pub fn get(&self, x: usize, y: usize) -> F {
        self.probs[x * self.ny + y]
    }

    pub fn row(&self, x: usize) -> &[F] {
        &self.probs[x * self.ny..(x + 1) * self.ny]
    }

    pub fn x_marginal(&self) -> Dist<F> {
        Dist {
            probs: (0..self.nx).map(|x| self.row(x).iter().copied().sum()).collect(),
        }
    }

    pub fn y_marginal(&self) -> Dist<F> {
        let mut py = vec![F::zero(); self.ny];
        for x in 0..self.nx {
            for (acc, &p) in py.iter_mut().zip(self.row(x)) {
                *acc = *acc + p;
            }
        }
        Dist { probs: py }
    }

    /// The product of this joint's own marginals.
    pub fn independent_coupling(&self) -> Self {
        Self::product(&self.x_marginal(), &self.y_marginal())
    }

    pub fn cast<G: Real>(&self) -> JointDist<G> {
        JointDist {
            nx: self.nx,
            ny: self.ny,
            probs: self.probs.iter().map(|&p| G::lit(p.to_f64_lossy())).collect(),
        }
    }
}

/// A discrete memoryless channel `W(y|x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dmc<F> {
    nx: usize,
    ny: usize,
    w: Vec<F>,
    strictly_positive: bool,
}

impl<F: Real> Dmc<F> {
    pub fn from_rows(rows: &[Vec<F>]) -> Result<Self> {
        let nx = rows.len();
        Alphabet::new(nx)?;
        let ny = rows[0].len();
        Alphabet::new(ny)?;
        for row in rows {
            if row.len() != ny {
                return Err(Error::ShapeMismatch {
                    expected: format!("rows of length {ny}"),
                    found: format!("row of length {}", row.len()),
                });
            }
            check_probs(row)?;
        }
        let w = rows.concat();
        let strictly_positive = w.iter().all(|&v| v > F::zero());
        Ok(Self {
            nx,
            ny,
            w,
            strictly_positive,
        })
    }

    /// Binary symmetric channel with crossover probability `p`.
    pub fn bsc(p: F) -> Result<Self> {
        let one = F::one();
        Self::from_rows(&[vec![one - p, p], vec![p, one - p]])
    }

    /// Binary erasure channel with erasure probability `e`; output 2 is the erasure.
    pub fn bec(e: F) -> Result<Self> {
        let one = F::one();
        let z = F::zero();
        Self::from_rows(&[vec![one - e, z, e], vec![z, one - e, e]])
    }

    /// Identity channel on `k` symbols.
    pub fn noiseless(k: usize) -> Result<Self> {
        let rows: Vec<Vec<F>> = (0..k)
            .map(|x| (0..k).map(|y| if x == y { F::one() } else { F::zero() }).collect())
            .collect();
        if rows.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        Self::from_rows(&rows)
    }

    pub fn x_size(&self) -> usize {
        self.nx
    }

    pub fn y_size(&self) -> usize {
        self.ny
    }

    pub fn x_alphabet(&self) -> Alphabet {
        Alphabet { size: self.nx }
    }

    pub fn y_alphabet(&self) -> Alphabet {
        Alphabet { size: self.ny }
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.strictly_positive
    }

    pub fn row(&self, x: usize) -> &[F] {
        &self.w[x * self.ny..(x + 1) * self.ny]
    }

    pub fn get(&self, x: usize, y: usize) -> F {
        self.w[x * self.ny + y]
    }

    pub fn matrix(&self) -> &[F] {
        &self.w
    }

    pub fn rows(&self) -> Vec<Vec<F>> {
        (0..self.nx).map(|x| self.row(x).to_vec()).collect()
    }

    /// Output distribution `Σ_x q(x) W(·|x)`.
    pub fn output(&self, q: &Dist<F>) -> Result<Dist<F>> {
        Ok(JointDist::through_channel(q, self)?.y_marginal())
    }

    pub fn cast<G: Real>(&self) -> Dmc<G> {
        Dmc {
            nx: self.nx,
            ny: self.ny,
            w: self.w.iter().map(|&p| G::lit(p.to_f64_lossy())).collect(),
            strictly_positive: self.strictly_positive,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rejects_bad_input() {
        assert_eq!(Alphabet::new(0), Err(Error::EmptyAlphabet));
        assert!(matches!(
            Dist::new(vec![0.5, 0.6]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            Dist::new(vec![1.5, -0.5]),
            Err(Error::NegativeProbability { index: 1, .. })
        ));
        assert!(matches!(
            Dist::new(vec![f64::NAN, 1.0]),
            Err(Error::NonFinite { index: 0 })
        ));
        assert!(JointDist::new(2, 2, vec![0.5, 0.5, 0.0]).is_err());
        assert!(Dmc::from_rows(&[vec![0.5, 0.5], vec![1.0]]).is_err());
    }

    #[test]
    fn marginals_are_row_and_column_sums() {
        let p = JointDist::<f64>::from_rows(&[vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
        let px = p.x_marginal();
        let py = p.y_marginal();
        assert!((px.probs()[0] - 0.3).abs() < 1e-15);
        assert!((py.probs()[1] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn channel_flags_and_output() {
        let bsc = Dmc::bsc(0.1_f64).unwrap();
        assert!(bsc.is_strictly_positive());
        assert!(!Dmc::<f64>::noiseless(2).unwrap().is_strictly_positive());
        assert!(!Dmc::bec(0.2_f64).unwrap().is_strictly_positive());
        let q = Dist::new(vec![0.25, 0.75]).unwrap();
        let out = bsc.output(&q).unwrap();
        assert!((out.probs()[0] - (0.25 * 0.9 + 0.75 * 0.1)).abs() < 1e-15);
    }

    #[test]
    fn f32_instantiation() {
        let q = Dist::<f32>::uniform(3).unwrap();
        assert_eq!(q.len(), 3);
        let w = Dmc::<f32>::bsc(0.25).unwrap();
        let j = JointDist::through_channel(&Dist::uniform(2).unwrap(), &w).unwrap();
        assert!((j.probs().iter().sum::<f32>() - 1.0).abs() < 1e-6);
    }
}
