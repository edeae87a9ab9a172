//! Minimization over joint distributions with fixed marginals.
//!
//! Stage one scans a lattice of feasible joints; stage two polishes the best
//! lattice points with a derivative-free pattern search whose moves preserve
//! the marginal constraints. Both stages only ever keep strict improvements,
//! so the returned value never exceeds the best lattice value.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{enumerate_joint_types, quantize_to_type, Dist, JointDist, TypeDist};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Lattice resolution of the initial scan.
    pub grid_denominator: u32,
    /// Run the local pattern search after the scan.
    pub refine: bool,
    /// Smallest pattern-search step and root-finding tolerance, in nats or probability units.
    pub tolerance: f64,
    /// Number of best lattice points used as pattern-search starts.
    pub restarts: usize,
    /// The lattice resolution is lowered until the scan has at most this many points.
    pub max_grid_points: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grid_denominator: 16,
            refine: true,
            tolerance: 1e-10,
            restarts: 3,
            max_grid_points: 50_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_denominator < 2 {
            return Err(Error::InvalidParameter("grid_denominator must be at least 2".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        if self.max_grid_points == 0 {
            return Err(Error::InvalidParameter("max_grid_points must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Minimum<F> {
    pub joint: JointDist<F>,
    pub value: F,
}

/// The Y-side constraint of a joint minimization.
#[derive(Debug, Clone, Copy)]
pub enum Output<'a, F> {
    /// Any Y-marginal on an alphabet of this size.
    Free(usize),
    /// Exactly this Y-marginal.
    Fixed(&'a Dist<F>),
}

/// Minimizes `objective` over joints with X-marginal `x_marginal` and the
/// given Y-side constraint.
pub fn minimize_over_joint<F: Real>(
    objective: &(dyn Fn(&JointDist<F>) -> F + Sync),
    x_marginal: &Dist<F>,
    output: Output<'_, F>,
    cfg: &SolverConfig,
) -> Result<Minimum<F>> {
    minimize_over_joint_from(objective, x_marginal, output, cfg, &[])
}

/// As [`minimize_over_joint`], with extra caller-supplied feasible starting points.
pub fn minimize_over_joint_from<F: Real>(
    objective: &(dyn Fn(&JointDist<F>) -> F + Sync),
    x_marginal: &Dist<F>,
    output: Output<'_, F>,
    cfg: &SolverConfig,
    starts: &[JointDist<F>],
) -> Result<Minimum<F>> {
    match output {
        Output::Free(ny) => minimize_sized(objective, x_marginal, None, ny, cfg, starts),
        Output::Fixed(py) => minimize_sized(objective, x_marginal, Some(py), py.len(), cfg, starts),
    }
}

fn minimize_sized<F: Real>(
    objective: &(dyn Fn(&JointDist<F>) -> F + Sync),
    x_marginal: &Dist<F>,
    y_marginal: Option<&Dist<F>>,
    ny: usize,
    cfg: &SolverConfig,
    starts: &[JointDist<F>],
) -> Result<Minimum<F>> {
    cfg.validate()?;
    let nx = x_marginal.len();
    for s in starts {
        if s.x_size() != nx || s.y_size() != ny {
            return Err(Error::ShapeMismatch {
                expected: format!("{nx}x{ny}"),
                found: format!("{}x{}", s.x_size(), s.y_size()),
            });
        }
    }
    let eval = |p: &[F]| -> Result<F> {
        let v = objective(&JointDist::from_raw(nx, ny, p.to_vec()));
        if v.is_nan() {
            Err(Error::NanObjective)
        } else {
            Ok(v)
        }
    };

    let keep = cfg.restarts.max(1);
    let mut best: Vec<(F, Vec<F>)> = Vec::with_capacity(keep + 1);
    let mut offer = |v: F, p: Vec<F>| {
        if best.len() < keep || v < best[best.len() - 1].0 {
            let pos = best.iter().position(|(b, _)| v < *b).unwrap_or(best.len());
            best.insert(pos, (v, p));
            best.truncate(keep);
        }
    };

    let lattice = Lattice::new(x_marginal, y_marginal, ny, cfg)?;
    let mut any = false;
    for p in lattice {
        any = true;
        let v = eval(&p)?;
        offer(v, p);
    }
    if !any {
        return Err(Error::Infeasible("no joint satisfies the marginal constraints".into()));
    }
    let mut seeds: Vec<(F, Vec<F>)> = best;
    for s in starts {
        let v = eval(s.probs())?;
        seeds.push((v, s.probs().to_vec()));
    }
    let mut incumbent = seeds
        .iter()
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .cloned()
        .unwrap();
    if cfg.refine {
        let moves = Moves::new(x_marginal, y_marginal, nx, ny);
        for (k, (v, p)) in seeds.into_iter().enumerate() {
            if v == F::infinity() {
                continue;
            }
            let h0 = F::one() / F::from_u32(cfg.grid_denominator).unwrap();
            let (pv, pp) = pattern_search(&eval, &moves, p, v, h0, cfg, k as u64)?;
            if pv < incumbent.0 {
                incumbent = (pv, pp);
            }
        }
    }
    Ok(Minimum {
        joint: JointDist::from_raw(nx, ny, incumbent.1),
        value: incumbent.0,
    })
}

fn compositions(total: u64, parts: usize) -> Vec<Vec<u64>> {
    enumerate_joint_types(1, parts, total, None, None)
        .map(|it| it.map(|t| t.counts().to_vec()).collect())
        .unwrap_or_default()
}

fn binom(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn exact_type<F: Real>(d: &Dist<F>, n: u32) -> Option<TypeDist> {
    let nf = F::from_u32(n).unwrap();
    let counts: Vec<u64> = d
        .probs()
        .iter()
        .map(|&p| (p * nf).round().to_u64().unwrap_or(0))
        .collect();
    let exact = d
        .probs()
        .iter()
        .zip(&counts)
        .all(|(&p, &c)| (p * nf - F::from_u64(c).unwrap()).abs() <= F::lit(1e-9));
    if exact && counts.iter().sum::<u64>() == n as u64 {
        TypeDist::from_counts(counts).ok()
    } else {
        None
    }
}

/// Finite set of feasible joints scanned in stage one.
///
/// When the prescribed marginals are themselves d-types the lattice is the
/// set of joint d-types with those marginals. Otherwise, with only the
/// X-marginal fixed, it is `Q(x) V(y|x)` with every row of `V` a d-type;
/// with both marginals fixed, joint types with quantized margins are shifted
/// back onto the exact margins and mixed toward `Q × P_Y` where needed.
enum Lattice<F> {
    Types {
        iter: crate::prob::JointTypeIter,
        fix: Option<(Vec<F>, Vec<F>)>,
        remaining: usize,
    },
    Rows {
        q: Vec<F>,
        comps: Vec<Vec<u64>>,
        rows: Vec<usize>,
        idx: Vec<usize>,
        d: u64,
        ny: usize,
        done: bool,
    },
}

impl<F: Real> Lattice<F> {
    fn new(q: &Dist<F>, py: Option<&Dist<F>>, ny: usize, cfg: &SolverConfig) -> Result<Self> {
        let nx = q.len();
        let d = cfg.grid_denominator;
        let cap = cfg.max_grid_points;
        match py {
            Some(py) => {
                let tq = exact_type(q, d);
                let tp = exact_type(py, d);
                let (tq, tp, fix, n) = match (tq, tp) {
                    (Some(a), Some(b)) => (a, b, None, d as u64),
                    _ => {
                        let support = q.support_size().max(py.support_size()) as u64;
                        let n = (d as u64).max(support);
                        (
                            quantize_to_type(q, n)?,
                            quantize_to_type(py, n)?,
                            Some((q.probs().to_vec(), py.probs().to_vec())),
                            n,
                        )
                    }
                };
                let iter = enumerate_joint_types(nx, ny, n, Some(&tq), Some(&tp))?;
                Ok(Lattice::Types {
                    iter,
                    fix,
                    remaining: cap,
                })
            }
            None => {
                let rows: Vec<usize> = (0..nx).filter(|&x| q.probs()[x] > F::zero()).collect();
                if let Some(tq) = exact_type(q, d) {
                    let count: f64 = tq
                        .counts()
                        .iter()
                        .map(|&c| binom(c + ny as u64 - 1, ny as u64 - 1))
                        .product();
                    if count <= cap as f64 {
                        let iter = enumerate_joint_types(nx, ny, d as u64, Some(&tq), None)?;
                        return Ok(Lattice::Types {
                            iter,
                            fix: None,
                            remaining: cap,
                        });
                    }
                }
                let mut dd = d as u64;
                while dd > 1
                    && binom(dd + ny as u64 - 1, ny as u64 - 1).powi(rows.len() as i32) > cap as f64
                {
                    dd -= 1;
                }
                let comps = compositions(dd, ny);
                Ok(Lattice::Rows {
                    q: q.probs().to_vec(),
                    comps,
                    idx: vec![0; rows.len()],
                    rows,
                    d: dd,
                    ny,
                    done: false,
                })
            }
        }
    }
}

impl<F: Real> Iterator for Lattice<F> {
    type Item = Vec<F>;

    fn next(&mut self) -> Option<Vec<F>> {
        match self {
            Lattice::Types {
                iter,
                fix,
                remaining,
            } => {
                if *remaining == 0 {
                    return None;
                }
                *remaining -= 1;
                let t = iter.next()?;
                let p = t.to_joint::<F>().probs().to_vec();
                Some(match fix {
                    None => p,
                    Some((q, py)) => shift_to_margins(p, q, py),
                })
            }
            Lattice::Rows {
                q,
                comps,
                rows,
                idx,
                d,
                ny,
                done,
            } => {
                if *done {
                    return None;
                }
                let ny = *ny;
                let df = F::from_u64(*d).unwrap();
                let mut p = vec![F::zero(); q.len() * ny];
                for (r, &x) in rows.iter().enumerate() {
                    for y in 0..ny {
                        p[x * ny + y] = q[x] * F::from_u64(comps[idx[r]][y]).unwrap() / df;
                    }
                }
                // Odometer over rows.
                let mut r = rows.len();
                loop {
                    if r == 0 {
                        *done = true;
                        break;
                    }
                    r -= 1;
                    idx[r] += 1;
                    if idx[r] < comps.len() {
                        break;
                    }
                    idx[r] = 0;
                }
                Some(p)
            }
        }
    }
}

/// Moves a table with nearly-right margins onto the exact margins `q`, `py`,
/// then mixes toward `q × py` just enough to restore nonnegativity.
fn shift_to_margins<F: Real>(mut p: Vec<F>, q: &[F], py: &[F]) -> Vec<F> {
    let (nx, ny) = (q.len(), py.len());
    let rows: Vec<F> = (0..nx).map(|x| p[x * ny..(x + 1) * ny].iter().copied().sum()).collect();
    let cols: Vec<F> = (0..ny).map(|y| (0..nx).map(|x| p[x * ny + y]).sum()).collect();
    for x in 0..nx {
        for y in 0..ny {
            p[x * ny + y] = p[x * ny + y] + (q[x] - rows[x]) * py[y] + q[x] * (py[y] - cols[y]);
        }
    }
    let mut t = F::zero();
    for x in 0..nx {
        for y in 0..ny {
            let v = p[x * ny + y];
            if v < F::zero() {
                let prod = q[x] * py[y];
                t = t.max(-v / (prod - v));
            }
        }
    }
    for x in 0..nx {
        for y in 0..ny {
            let v = (F::one() - t) * p[x * ny + y] + t * q[x] * py[y];
            p[x * ny + y] = v.max(F::zero());
        }
    }
    p
}

/// Elementary feasible directions as sparse `(index, sign)` lists.
struct Moves {
    dirs: Vec<Vec<(usize, i8)>>,
}

impl Moves {
    fn new<F: Real>(q: &Dist<F>, py: Option<&Dist<F>>, nx: usize, ny: usize) -> Self {
        let rows: Vec<usize> = (0..nx).filter(|&x| q.probs()[x] > F::zero()).collect();
        let mut dirs = Vec::new();
        match py {
            None => {
                for &x in &rows {
                    for j in 0..ny {
                        for k in j + 1..ny {
                            dirs.push(vec![(x * ny + j, 1), (x * ny + k, -1)]);
                        }
                    }
                }
            }
            Some(py) => {
                let cols: Vec<usize> = (0..ny).filter(|&y| py.probs()[y] > F::zero()).collect();
                for (a, &x1) in rows.iter().enumerate() {
                    for &x2 in &rows[a + 1..] {
                        for (b, &j) in cols.iter().enumerate() {
                            for &k in &cols[b + 1..] {
                                dirs.push(vec![
                                    (x1 * ny + j, 1),
                                    (x1 * ny + k, -1),
                                    (x2 * ny + j, -1),
                                    (x2 * ny + k, 1),
                                ]);
                            }
                        }
                    }
                }
            }
        }
        Self { dirs }
    }
}

/// Moves `p` by `h · dir`, shortening the step to stay on the simplex face.
/// Returns `None` when no positive step is possible.
fn step_along<F: Real>(p: &[F], dir: &[F], h: F) -> Option<Vec<F>> {
    let mut t = h;
    for (i, &d) in dir.iter().enumerate() {
        if d < F::zero() {
            t = t.min(p[i] / -d);
        }
    }
    if !(t > F::zero()) {
        return None;
    }
    Some(
        p.iter()
            .zip(dir)
            .map(|(&a, &d)| (a + t * d).max(F::zero()))
            .collect(),
    )
}

fn pattern_search<F: Real>(
    eval: &dyn Fn(&[F]) -> Result<F>,
    moves: &Moves,
    mut p: Vec<F>,
    mut v: F,
    h0: F,
    cfg: &SolverConfig,
    seed: u64,
) -> Result<(F, Vec<F>)> {
    if moves.dirs.is_empty() {
        return Ok((v, p));
    }
    let len = p.len();
    let basis: Vec<Vec<F>> = moves
        .dirs
        .iter()
        .map(|d| {
            let mut full = vec![F::zero(); len];
            for &(i, s) in d {
                full[i] = F::from_i8(s).unwrap();
            }
            full
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 ^ seed);
    let h_min = F::lit(cfg.tolerance).max(F::epsilon() * F::lit(8.0));
    let mut h = h0;
    let n_random = 2 + basis.len().min(6);
    let mut evals = 0usize;
    let budget = 20_000usize;
    while h >= h_min && evals < budget {
        let mut best: Option<(F, Vec<F>)> = None;
        let consider = |cand: Vec<F>, best: &mut Option<(F, Vec<F>)>| -> Result<()> {
            let cv = eval(&cand)?;
            if cv < v && best.as_ref().is_none_or(|(b, _)| cv < *b) {
                *best = Some((cv, cand));
            }
            Ok(())
        };
        for dir in &basis {
            for sign in [F::one(), -F::one()] {
                let d: Vec<F> = dir.iter().map(|&c| c * sign).collect();
                if let Some(c) = step_along(&p, &d, h) {
                    evals += 1;
                    consider(c, &mut best)?;
                }
            }
        }
        for _ in 0..n_random {
            let mut d = vec![F::zero(); len];
            for dir in &basis {
                let w = F::lit(rng.random_range(-1.0..1.0));
                for i in 0..len {
                    d[i] = d[i] + w * dir[i];
                }
            }
            let norm = d.iter().map(|&c| c.abs()).fold(F::zero(), F::max);
            if norm > F::zero() {
                d.iter_mut().for_each(|c| *c = *c / norm);
                if let Some(c) = step_along(&p, &d, h) {
                    evals += 1;
                    consider(c, &mut best)?;
                }
            }
        }
        match best {
            Some((cv, c)) => {
                v = cv;
                p = c;
                h = (h + h).min(h0);
            }
            None => h = h * F::lit(0.5),
        }
    }
    Ok((v, p))
}
