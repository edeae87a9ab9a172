//! n-types: integer count tables with a common denominator.

use super::{Dist, JointDist};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// An integer count table summing to `n`, row-major. Single-variable types
/// are stored as one row.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TypeDist {
    n: u64,
    rows: usize,
    cols: usize,
    counts: Vec<u64>,
}

impl TypeDist {
    pub fn new(rows: usize, cols: usize, counts: Vec<u64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyAlphabet);
        }
        if counts.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: format!("{} counts", rows * cols),
                found: format!("{} counts", counts.len()),
            });
        }
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::InvalidType("denominator must be positive".into()));
        }
        Ok(Self {
            n,
            rows,
            cols,
            counts,
        })
    }

    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        let k = counts.len();
        Self::new(1, k, counts)
    }

    pub fn denominator(&self) -> u64 {
        self.n
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.chunks(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        let mut c = vec![0; self.cols];
        for row in self.counts.chunks(self.cols) {
            for (acc, &v) in c.iter_mut().zip(row) {
                *acc += v;
            }
        }
        c
    }

    pub fn to_dist<F: Real>(&self) -> Dist<F> {
        let n = F::from_u64(self.n).unwrap();
        Dist {
            probs: self
                .counts
                .iter()
                .map(|&c| F::from_u64(c).unwrap() / n)
                .collect(),
        }
    }

    pub fn to_joint<F: Real>(&self) -> JointDist<F> {
        let n = F::from_u64(self.n).unwrap();
        JointDist::from_raw(
            self.rows,
            self.cols,
            self.counts
                .iter()
                .map(|&c| F::from_u64(c).unwrap() / n)
                .collect(),
        )
    }
}

/// Lazily enumerates every `x_size × y_size` count table with total `n`
/// whose row sums and/or column sums match the given margins.
///
/// Tables are produced in ascending lexicographic order of their row-major
/// count vectors. Inconsistent margins yield an empty stream.
pub fn enumerate_joint_types(
    x_size: usize,
    y_size: usize,
    n: u64,
    x_margin: Option<&TypeDist>,
    y_margin: Option<&TypeDist>,
) -> Result<JointTypeIter> {
    if x_size == 0 || y_size == 0 {
        return Err(Error::EmptyAlphabet);
    }
    if n == 0 {
        return Err(Error::InvalidType("denominator must be positive".into()));
    }
    let check = |m: Option<&TypeDist>, size: usize| -> Result<Option<Vec<u64>>> {
        match m {
            None => Ok(None),
            Some(t) => {
                if t.counts().len() != size {
                    return Err(Error::ShapeMismatch {
                        expected: format!("margin of size {size}"),
                        found: format!("size {}", t.counts().len()),
                    });
                }
                Ok(Some(t.counts().to_vec()))
            }
        }
    };
    let rows = check(x_margin, x_size)?;
    let cols = check(y_margin, y_size)?;
    let feasible = rows.as_ref().is_none_or(|r| r.iter().sum::<u64>() == n)
        && cols.as_ref().is_none_or(|c| c.iter().sum::<u64>() == n);
    Ok(JointTypeIter {
        nx: x_size,
        ny: y_size,
        n,
        rows,
        cols,
        cells: Vec::with_capacity(x_size * y_size),
        started: false,
        done: !feasible,
    })
}

#[derive(Debug, Clone)]
pub struct JointTypeIter {
    nx: usize,
    ny: usize,
    n: u64,
    rows: Option<Vec<u64>>,
    cols: Option<Vec<u64>>,
    cells: Vec<u64>,
    started: bool,
    done: bool,
}

impl JointTypeIter {
    /// Inclusive range of admissible values for the next cell given the prefix.
    fn bounds(&self, prefix: &[u64]) -> Option<(u64, u64)> {
        let k = prefix.len();
        let (i, j) = (k / self.ny, k % self.ny);
        let used: u64 = prefix.iter().sum();
        let total_rem = self.n - used;
        let row_used: u64 = prefix[i * self.ny..].iter().sum();
        let mut col_used = 0;
        for r in 0..i {
            col_used += prefix[r * self.ny + j];
        }
        let row_rem = self.rows.as_ref().map(|r| r[i].checked_sub(row_used));
        let col_rem = self.cols.as_ref().map(|c| c[j].checked_sub(col_used));
        let row_rem = match row_rem {
            Some(None) => return None,
            Some(Some(v)) => Some(v),
            None => None,
        };
        let col_rem = match col_rem {
            Some(None) => return None,
            Some(Some(v)) => Some(v),
            None => None,
        };
        let last_col = j + 1 == self.ny;
        let last_row = i + 1 == self.nx;
        let mut hi = total_rem;
        if let Some(r) = row_rem {
            hi = hi.min(r);
        }
        if let Some(c) = col_rem {
            hi = hi.min(c);
        }
        let mut lo = 0;
        match (&self.rows, &self.cols) {
            (Some(_), Some(cols)) => {
                // Later columns of this row must absorb the rest of the row sum.
                let mut later_cols = 0;
                for (jj, &cj) in cols.iter().enumerate().skip(j + 1) {
                    let mut used = 0;
                    for r in 0..i {
                        used += prefix[r * self.ny + jj];
                    }
                    later_cols += cj.saturating_sub(used);
                }
                lo = row_rem.unwrap().saturating_sub(later_cols);
            }
            (Some(_), None) => {
                if last_col {
                    lo = row_rem.unwrap();
                }
            }
            (None, Some(_)) => {
                if last_row {
                    lo = col_rem.unwrap();
                }
            }
            (None, None) => {
                if last_row && last_col {
                    lo = total_rem;
                }
            }
        }
        if lo > hi {
            None
        } else {
            Some((lo, hi))
        }
    }

    /// Extends `cells` greedily with lower bounds; false if a dead end is hit.
    fn fill(&mut self) -> bool {
        while self.cells.len() < self.nx * self.ny {
            match self.bounds(&self.cells) {
                Some((lo, _)) => self.cells.push(lo),
                None => return false,
            }
        }
        self.complete()
    }

    fn complete(&self) -> bool {
        let total: u64 = self.cells.iter().sum();
        if total != self.n {
            return false;
        }
        let t = TypeDist {
            n: self.n,
            rows: self.nx,
            cols: self.ny,
            counts: self.cells.clone(),
        };
        self.rows.as_ref().is_none_or(|r| *r == t.row_sums())
            && self.cols.as_ref().is_none_or(|c| *c == t.col_sums())
    }

    /// Advances to the next complete table in lexicographic order.
    fn advance(&mut self) -> bool {
        loop {
            // Increment the deepest cell that still has room, then refill.
            let mut bumped = false;
            while let Some(v) = self.cells.pop() {
                let (_, hi) = match self.bounds(&self.cells) {
                    Some(b) => b,
                    None => continue,
                };
                if v < hi {
                    self.cells.push(v + 1);
                    bumped = true;
                    break;
                }
            }
            if !bumped {
                return false;
            }
            if self.fill() {
                return true;
            }
        }
    }
}

impl Iterator for JointTypeIter {
    type Item = TypeDist;

    fn next(&mut self) -> Option<TypeDist> {
        if self.done {
            return None;
        }
        let ok = if self.started {
            self.advance()
        } else {
            self.started = true;
            self.fill() || self.advance()
        };
        if !ok {
            self.done = true;
            return None;
        }
        Some(TypeDist {
            n: self.n,
            rows: self.nx,
            cols: self.ny,
            counts: self.cells.clone(),
        })
    }
}

/// Rounds `q` to an n-type with the same support and `max |count/n − q| < 1/n`.
///
/// Every supported symbol first receives `max(1, ⌊n q⌋)`; the remaining mass
/// goes to the largest remainders, lowest index first on ties.
pub fn quantize_to_type<F: Real>(q: &Dist<F>, n: u64) -> Result<TypeDist> {
    if n == 0 {
        return Err(Error::DenominatorTooSmall { n });
    }
    let nf = F::from_u64(n).unwrap();
    let mut counts = Vec::with_capacity(q.len());
    let mut rems = Vec::with_capacity(q.len());
    for &p in q.probs() {
        let target = p * nf;
        let base = if p > F::zero() {
            target.floor().to_u64().unwrap_or(0).max(1)
        } else {
            0
        };
        counts.push(base);
        rems.push(if p > F::zero() {
            target - F::from_u64(base).unwrap()
        } else {
            F::neg_infinity()
        });
    }
    let used: u64 = counts.iter().sum();
    if used > n {
        return Err(Error::DenominatorTooSmall { n });
    }
    let mut order: Vec<usize> = (0..q.len()).filter(|&i| q.probs()[i] > F::zero()).collect();
    order.sort_by(|&a, &b| rems[b].partial_cmp(&rems[a]).unwrap().then(a.cmp(&b)));
    let left = (n - used) as usize;
    if left > order.len() {
        // Only reachable through pathological rounding of the input mass.
        return Err(Error::InvalidType("rounding residue exceeds support".into()));
    }
    for &i in order.iter().take(left) {
        counts[i] += 1;
    }
    TypeDist::from_counts(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all(nx: usize, ny: usize, n: u64, r: Option<&TypeDist>, c: Option<&TypeDist>) -> Vec<Vec<u64>> {
        enumerate_joint_types(nx, ny, n, r, c)
            .unwrap()
            .map(|t| t.counts().to_vec())
            .collect()
    }

    #[test]
    fn single_variable_stars_and_bars() {
        assert_eq!(all(1, 2, 2, None, None), vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
    }

    #[test]
    fn unconstrained_two_by_two() {
        let v = all(2, 2, 2, None, None);
        assert_eq!(v.len(), 10);
        let mut sorted = v.clone();
        sorted.sort();
        assert_eq!(v, sorted);
    }

    #[test]
    fn both_margins_fixed() {
        let m = TypeDist::from_counts(vec![2, 2]).unwrap();
        let v = all(2, 2, 4, Some(&m), Some(&m));
        assert_eq!(v, vec![vec![0, 2, 2, 0], vec![1, 1, 1, 1], vec![2, 0, 0, 2]]);
    }

    #[test]
    fn infeasible_margins_give_empty_stream() {
        let a = TypeDist::from_counts(vec![3, 1]).unwrap();
        assert!(all(2, 2, 5, Some(&a), None).is_empty());
        let zero_col = TypeDist::from_counts(vec![4, 0]).unwrap();
        let rows = TypeDist::from_counts(vec![2, 2]).unwrap();
        assert_eq!(all(2, 2, 4, Some(&rows), Some(&zero_col)).len(), 1);
    }

    #[test]
    fn quantize_examples() {
        let q = Dist::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(quantize_to_type(&q, 3).unwrap().counts(), &[2, 1]);
        let q = Dist::new(vec![0.3, 0.7]).unwrap();
        assert_eq!(quantize_to_type(&q, 10).unwrap().counts(), &[3, 7]);
        let q = Dist::new(vec![0.25, 0.75]).unwrap();
        assert_eq!(quantize_to_type(&q, 4).unwrap().counts(), &[1, 3]);
        let q = Dist::new(vec![0.6, 0.2, 0.2]).unwrap();
        assert_eq!(quantize_to_type(&q, 3).unwrap().counts(), &[1, 1, 1]);
        assert_eq!(
            quantize_to_type(&q, 2),
            Err(Error::DenominatorTooSmall { n: 2 })
        );
        // Keeping both rare symbols forces the common one below n·q − 1.
        let q = Dist::new(vec![0.98, 0.01, 0.01]).unwrap();
        assert!(quantize_to_type(&q, 4).is_err());
        assert_eq!(quantize_to_type(&q, 100).unwrap().counts(), &[98, 1, 1]);
    }
}
