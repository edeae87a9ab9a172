//! Numerical checks of the scalar lemmas, the integral exponent and a few
//! engine-versus-oracle comparisons, grouped into named suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    binomial_tail_exponent, binomial_tail_prob, e_hat_b, integral_exponent_closed_form, integral_exponent_numeric,
    lambert_w0, log_tail, verify_xl_lemma, xi_star, IntegralParams, TailQuery,
};
use crate::error::{Error, Result};
use crate::exponent::{random_coding_exponent, randomized_list_exponent_fixed, ExponentQuery, ListSize, SolverConfig};
use crate::metric::{eval_metric, MetricSpec};
use crate::prob::{binary_divergence, enumerate_joint_types, kl, mutual_information, Dist, Dmc, JointDist, TypeDist};
use crate::scalar::pos;

pub const SUITES: &[&str] = &[
    "xi-star",
    "lambert-w",
    "chernoff",
    "binary-divergence",
    "l1-identity",
    "xl-lemma",
    "integral",
    "tail-exponent",
    "grid-oracle",
    "list-identity",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub suite: String,
    pub check: String,
    /// The quantity compared against `allowed`.
    pub observed: f64,
    pub allowed: f64,
    pub passed: bool,
    /// Number of sub-cases folded into this row.
    pub cases: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidateOptions {
    /// Suites to run; empty means all.
    pub only: Vec<String>,
    /// Multiplies every tolerance. Zero turns approximate equalities into
    /// exact ones.
    pub tolerance_scale: f64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            only: Vec::new(),
            tolerance_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub rows: Vec<CheckRow>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRow> {
        self.rows.iter().filter(|r| !r.passed)
    }
}

/// Collects rows for one suite.
struct Suite<'a> {
    name: &'static str,
    scale: f64,
    rows: &'a mut Vec<CheckRow>,
}

impl Suite<'_> {
    /// `observed ≤ tol·scale`.
    fn within(&mut self, check: impl Into<String>, observed: f64, tol: f64) {
        let allowed = tol * self.scale;
        self.push(check, observed, allowed, observed <= allowed, 1, (observed > allowed) as usize);
    }

    /// A batch of inequality checks summarised by the worst margin. Each
    /// margin must be `≤ tol·scale` (or `< 0` when `strict`).
    fn all(&mut self, check: impl Into<String>, margins: &[f64], tol: f64, strict: bool) {
        let allowed = tol * self.scale;
        let bad = |m: f64| m.is_nan() || if strict { m >= allowed } else { m > allowed };
        let violations = margins.iter().filter(|&&m| bad(m)).count();
        let worst = margins.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.push(check, worst, allowed, violations == 0 && !margins.is_empty(), margins.len(), violations);
    }

    fn push(&mut self, check: impl Into<String>, observed: f64, allowed: f64, passed: bool, cases: usize, violations: usize) {
        self.rows.push(CheckRow {
            suite: self.name.to_string(),
            check: check.into(),
            observed,
            allowed,
            passed,
            cases,
            violations,
        });
    }

    fn error(&mut self, check: impl Into<String>, e: Error) {
        let check = format!("{}: {e}", check.into());
        self.push(check, f64::NAN, 0.0, false, 1, 1);
    }
}

/// Runs the selected suites. Unknown suite names are an error.
pub fn run_validation(opts: &ValidateOptions) -> Result<ValidationReport> {
    if let Some(bad) = opts.only.iter().find(|s| !SUITES.contains(&s.as_str())) {
        return Err(Error::InvalidParameter(format!(
            "unknown suite `{bad}`; known: {}",
            SUITES.join(", ")
        )));
    }
    if !(opts.tolerance_scale >= 0.0) {
        return Err(Error::InvalidParameter("tolerance scale must be nonnegative".into()));
    }
    let mut rows = Vec::new();
    for &name in SUITES {
        if !opts.only.is_empty() && !opts.only.iter().any(|s| s == name) {
            continue;
        }
        let mut s = Suite {
            name,
            scale: opts.tolerance_scale,
            rows: &mut rows,
        };
        match name {
            "xi-star" => xi_star_suite(&mut s),
            "lambert-w" => lambert_suite(&mut s),
            "chernoff" => chernoff_suite(&mut s),
            "binary-divergence" => divergence_suite(&mut s),
            "l1-identity" => l1_suite(&mut s),
            "xl-lemma" => xl_suite(&mut s),
            "integral" => integral_suite(&mut s),
            "tail-exponent" => tail_suite(&mut s),
            "grid-oracle" => grid_suite(&mut s),
            "list-identity" => list_identity_suite(&mut s),
            _ => unreachable!(),
        }
    }
    Ok(ValidationReport { rows })
}

fn xi_star_suite(s: &mut Suite<'_>) {
    s.within("L=1 gives 1/2", (xi_star(1.0).unwrap_or(f64::NAN) - 0.5).abs(), 1e-14);
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    s.within("L=2 gives the golden ratio root", (xi_star(2.0).unwrap_or(f64::NAN) - golden).abs(), 1e-14);
    let mut prev = 0.0;
    for l in [3.0f64, 10.0, 1e3, 1e6] {
        let xi = match xi_star(l) {
            Ok(v) => v,
            Err(e) => {
                s.error(format!("L={l}"), e);
                continue;
            }
        };
        s.within(format!("L={l} root residual"), (xi.powf(l) + xi - 1.0).abs(), 1e-12);
        s.all(format!("L={l} upper bound L/(L+1)"), &[xi - l / (l + 1.0)], 0.0, false);
        s.all(format!("L={l} lower bound 1-ln(L)/L"), &[1.0 - l.ln() / l - xi], 0.0, false);
        s.all(format!("L={l} increasing"), &[prev - xi], 0.0, true);
        prev = xi;
    }
}

fn lambert_suite(s: &mut Suite<'_>) {
    s.within("W(0)", lambert_w0(0.0).unwrap_or(f64::NAN).abs(), 1e-14);
    s.within("W(e)", (lambert_w0(std::f64::consts::E).unwrap_or(f64::NAN) - 1.0).abs(), 1e-14);
    let mut residuals = Vec::new();
    for i in 0..=400 {
        let x = 10f64.powf(-6.0 + i as f64 * 0.03);
        let w = lambert_w0(x).unwrap_or(f64::NAN);
        residuals.push((w * w.exp() - x).abs() / x);
    }
    s.all("w·e^w = x on [1e-6, 1e6]", &residuals, 1e-12, false);
    let margins: Vec<f64> = [std::f64::consts::E, 10.0, 1e3, 1e6]
        .iter()
        .map(|&l: &f64| lambert_w0(l).unwrap_or(f64::NAN) - l.ln())
        .collect();
    s.all("W(L) ≤ ln L for L ≥ e", &margins, 1e-14, false);
}

fn chernoff_suite(s: &mut Suite<'_>) {
    let ms = [10u64, 20, 50, 100, 200, 500, 1000];
    let mut upper = Vec::new();
    let mut half = Vec::new();
    let mut support = Vec::new();
    for &m in &ms {
        let mf = m as f64;
        for pi in 1..20 {
            let p = pi as f64 / 20.0;
            for ri in 0..=50 {
                // p ≤ r ≤ 1, margin in log domain
                let r = p + (1.0 - p) * ri as f64 / 50.0;
                let lt = log_tail(m, p, r * mf);
                upper.push(lt + mf * binary_divergence(r, p));
                // 0 ≤ r ≤ p
                let r = p * ri as f64 / 50.0;
                half.push(0.5 - binomial_tail_prob(m, p, r * mf));
            }
            support.push((binomial_tail_prob(m, p, -0.1 * mf) - 1.0).abs());
            support.push(binomial_tail_prob(m, p, 1.01 * mf));
        }
    }
    s.all("P(X ≥ rm) ≤ exp(-m d(r‖p)) for p ≤ r ≤ 1", &upper, 1e-12, false);
    s.all("P(X ≥ rm) ≥ 1/2 for 0 ≤ r ≤ p", &half, 0.0, false);
    s.all("P(X ≥ rm) is 1 for r < 0 and 0 for r > 1", &support, 0.0, false);
}

fn divergence_suite(s: &mut Suite<'_>) {
    let mut margins = Vec::new();
    for ri in 1..400 {
        for pi in 1..400 {
            let (r, p) = (ri as f64 / 400.0, pi as f64 / 400.0);
            margins.push(r * ((r / p).ln() - 1.0) - binary_divergence(r, p));
        }
    }
    s.all("d(r‖p) > r(ln(r/p) - 1) on the open unit square", &margins, 0.0, true);
}

fn l1_suite(s: &mut Suite<'_>) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut diffs = Vec::new();
    for _ in 0..10_000 {
        let a: f64 = rng.random_range(0.0..2.0);
        let b: f64 = rng.random_range(0.0..2.0);
        let c: f64 = rng.random_range(-2.0..2.0);
        let p = IntegralParams { a, b, c, l: 1, n: 1 };
        diffs.push((integral_exponent_closed_form(&p) - pos(b - a + pos(c))).abs());
    }
    s.all("L=1 closed form equals [B-A+[C]+]+", &diffs, 1e-12, false);
}

fn xl_suite(s: &mut Suite<'_>) {
    let one = verify_xl_lemma(&[1.0], &[1.0], 3);
    let zero = verify_xl_lemma(&[0.0], &[1.0], 3);
    match (one, zero) {
        (Ok((l1, r1)), Ok((l0, r0))) => {
            s.all("X ≡ 1 and X ≡ 0", &[l1 - r1, l0 - r0], 1e-12, false);
        }
        (Err(e), _) | (_, Err(e)) => s.error("degenerate laws", e),
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for l in [1u32, 2, 4, 16] {
        let mut margins = Vec::new();
        for _ in 0..1000 {
            let k = rng.random_range(1..=8);
            let atoms: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..=1.0)).collect();
            let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
            let z: f64 = w.iter().sum();
            let w: Vec<f64> = w.iter().map(|v| v / z).collect();
            match verify_xl_lemma(&atoms, &w, l) {
                Ok((lhs, rhs)) => margins.push(lhs - rhs),
                Err(_) => margins.push(f64::NAN),
            }
        }
        s.all(format!("E[X^L] ≤ min ξ^(L-1)E[X] + P(X > ξ), L={l}, 1000 laws"), &margins, 1e-12, false);
    }
}

/// `(A, B, C, L)` with `200·A ≤ 30`.
pub const INTEGRAL_TUPLES: [(f64, f64, f64, u32); 10] = [
    (0.10, 0.20, 0.10, 1),
    (0.10, 0.20, 0.30, 2),
    (0.15, 0.05, 0.20, 3),
    (0.15, 0.05, 0.05, 2),
    (0.05, 0.30, 0.20, 4),
    (0.12, 0.12, 0.15, 2),
    (0.10, 0.00, 0.20, 2),
    (0.00, 0.10, 0.30, 1),
    (0.15, 0.10, 0.40, 8),
    (0.08, 0.25, -0.10, 3),
];

fn integral_suite(s: &mut Suite<'_>) {
    let gap = |a: f64, b: f64, c: f64, l: u32, n: u32| -> Result<f64> {
        let p = IntegralParams { a, b, c, l, n };
        Ok((integral_exponent_numeric(&p)? - integral_exponent_closed_form(&p)).abs())
    };
    for (a, b, c, l) in INTEGRAL_TUPLES {
        let label = format!("A={a} B={b} C={c} L={l}");
        match (gap(a, b, c, l, 200), gap(a, b, c, l, 50)) {
            (Ok(g200), Ok(g50)) => {
                s.within(format!("{label}: gap at n=200"), g200, 0.05);
                s.all(format!("{label}: gap shrinks from n=50 to n=200"), &[g200 - g50], 0.0, true);
            }
            (Err(e), _) | (_, Err(e)) => s.error(label, e),
        }
    }
    let p = IntegralParams {
        a: 0.0,
        b: 0.0,
        c: -1.0,
        l: 2,
        n: 100,
    };
    match integral_exponent_numeric(&p) {
        Ok(v) => s.within("certain tail: integral is 1/(nL)", (v - (200f64).ln() / 100.0).abs(), 1e-12),
        Err(e) => s.error("certain tail", e),
    }
}

fn tail_suite(s: &mut Suite<'_>) {
    let e = |r: f64, i: f64, c: f64| {
        binomial_tail_exponent(&TailQuery {
            rate: r,
            information: i,
            threshold: c,
        })
    };
    s.within("R=0.5 I=0.2 C=0.1", e(0.5, 0.2, 0.1).abs(), 1e-15);
    s.within("R=0.2 I=0.5 C=0", (e(0.2, 0.5, 0.0) - 0.3).abs(), 1e-15);
    s.all("R=0.2 I=0.5 C=0.1 is infinite", &[if e(0.2, 0.5, 0.1).is_infinite() { -1.0 } else { 1.0 }], 0.0, true);
    // Finite-n: N ~ Bin(e^{nR}, e^{-nI}), event N ≥ e^{nC}.
    let n = 200.0;
    for (r, i, c) in [(0.10, 0.05, 0.02), (0.05, 0.10, 0.0), (0.12, 0.02, 0.05)] {
        let m = (n * r as f64).exp().floor() as u64;
        let lt = log_tail(m, (-n * i as f64).exp(), (n * c as f64).exp());
        s.within(format!("R={r} I={i} C={c} at n=200"), (-lt / n - e(r, i, c)).abs(), 0.05);
    }
}

fn grid_suite(s: &mut Suite<'_>) {
    let cfg = SolverConfig::default();
    // min over joint types of denominator 200 with uniform margins of I - g.
    let v = Dmc::bsc(0.2).unwrap();
    let g = MetricSpec::Mismatched(v);
    let half = TypeDist::from_counts(vec![100, 100]).unwrap();
    let mut best = f64::INFINITY;
    for t in enumerate_joint_types(2, 2, 200, Some(&half), Some(&half)).unwrap() {
        let p: JointDist<f64> = t.to_joint();
        best = best.min(mutual_information(&p) - eval_metric(&g, &p).unwrap_or(f64::NAN));
    }
    let u = Dist::uniform(2).unwrap();
    match e_hat_b(&u, &u, &g, &cfg) {
        Ok(v) => s.within("min I - g, mismatched BSC(0.2) metric, uniform margins", (v - best).abs(), 1e-3),
        Err(e) => s.error("min I - g", e),
    }
    // E_r of BSC(0.1) against a dense grid over the conditional V.
    let w = Dmc::bsc(0.1).unwrap();
    let d = 400;
    for r_bits in [0.05, 0.2, 0.35] {
        let r = r_bits * std::f64::consts::LN_2;
        let mut oracle = f64::INFINITY;
        for i in 0..=d {
            for j in 0..=d {
                let (a, b) = (i as f64 / d as f64, j as f64 / d as f64);
                let p = JointDist::new(2, 2, vec![0.5 * (1.0 - a), 0.5 * a, 0.5 * b, 0.5 * (1.0 - b)]).unwrap();
                let q = JointDist::through_channel(&u, &w).unwrap();
                oracle = oracle.min(kl(&p, &q).unwrap_or(f64::INFINITY) + pos(mutual_information(&p) - r));
            }
        }
        match random_coding_exponent(&w, &u, r, &cfg) {
            Ok(v) => s.within(format!("E_r at R={r_bits} bits vs grid"), (v - oracle).abs(), 1e-3),
            Err(e) => s.error(format!("E_r at R={r_bits} bits"), e),
        }
    }
}

fn list_identity_suite(s: &mut Suite<'_>) {
    let cfg = SolverConfig::default();
    let w = Dmc::bsc(0.1).unwrap();
    let q = Dist::uniform(2).unwrap();
    for r_bits in [0.05, 0.15, 0.25, 0.35] {
        let r = r_bits * std::f64::consts::LN_2;
        let er = match random_coding_exponent(&w, &q, r, &cfg) {
            Ok(v) => v,
            Err(e) => {
                s.error(format!("E_r at R={r_bits} bits"), e);
                continue;
            }
        };
        for l in [1u32, 4] {
            for metric in [MetricSpec::Matched(w.clone()), MetricSpec::Mmi] {
                let label = format!("{} E_1 = E_r, L={l}, R={r_bits} bits", metric.kind());
                let query = ExponentQuery {
                    channel: w.clone(),
                    q: q.clone(),
                    rate: r,
                    metric,
                    list: ListSize::Fixed(l),
                    solver: cfg.clone(),
                };
                match randomized_list_exponent_fixed(&query) {
                    Ok(v) => s.within(label, (v.value - er).abs(), 1e-3),
                    Err(e) => s.error(label, e),
                }
            }
        }
    }
}
