//! Pointwise evaluation of an exponent over a rate grid, and CSV output.

use std::io::Write;

use rayon::prelude::*;

use super::list::{
    deterministic_list_exponent_exp, deterministic_list_exponent_fixed, randomized_list_exponent_exp,
    randomized_list_exponent_fixed, ExponentValue,
};
use super::{hinge_exponent, sphere_packing_solution, ExponentQuery, ListSize, SolverConfig};
use crate::error::{Error, Result};
use crate::metric::MetricSpec;
use crate::prob::{Dist, Dmc};
use crate::scalar::{to_base, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentKind {
    RandomCoding,
    SpherePacking,
    /// Randomized list decoder; fixed or exponential according to the query's list size.
    RandomizedList,
    /// Deterministic top-L decoder; fixed or exponential according to the query's list size.
    DeterministicList,
}

/// A sampled exponent curve. Rates and values are expressed in `log_base` units.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentCurve<F> {
    pub rates: Vec<F>,
    pub values: Vec<F>,
    pub label: String,
    pub log_base: F,
    /// Points that relied on a convention (clamped rate or indeterminate metric gap).
    pub flagged: Vec<bool>,
}

fn evaluate<F: Real>(query: &ExponentQuery<F>, kind: ExponentKind) -> Result<ExponentValue<F>> {
    let (w, q, r, cfg) = (&query.channel, &query.q, query.rate, &query.solver);
    let plain = |value| ExponentValue { value, flagged: false };
    match (kind, query.list) {
        (ExponentKind::RandomCoding, _) => {
            query.validate()?;
            Ok(plain(hinge_exponent(w, q, r, F::one()).0))
        }
        (ExponentKind::SpherePacking, _) => {
            query.validate()?;
            Ok(plain(sphere_packing_solution(w, q, r).0))
        }
        (ExponentKind::RandomizedList, ListSize::Fixed(_)) => randomized_list_exponent_fixed(query),
        (ExponentKind::RandomizedList, ListSize::Exponential(_)) => randomized_list_exponent_exp(query),
        (ExponentKind::DeterministicList, ListSize::Fixed(l)) => {
            deterministic_list_exponent_fixed(w, q, r, l, cfg).map(plain)
        }
        (ExponentKind::DeterministicList, ListSize::Exponential(lam)) => {
            deterministic_list_exponent_exp(w, q, r, lam, cfg)
        }
    }
}

/// Evaluates `kind` at every rate of `rates` (nats, strictly increasing),
/// in parallel, and converts rates and values to `log_base` units.
pub fn sweep<F: Real>(
    query: &ExponentQuery<F>,
    kind: ExponentKind,
    rates: &[F],
    log_base: F,
    label: &str,
) -> Result<ExponentCurve<F>> {
    if rates.is_empty() {
        return Err(Error::InvalidParameter("empty rate grid".into()));
    }
    if rates.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("rate grid must be strictly increasing".into()));
    }
    if !(log_base > F::one()) {
        return Err(Error::InvalidParameter("log base must exceed 1".into()));
    }
    let points: Vec<ExponentValue<F>> = rates
        .par_iter()
        .map(|&r| {
            let mut q = query.clone();
            q.rate = r;
            evaluate(&q, kind)
        })
        .collect::<Result<_>>()?;
    Ok(ExponentCurve {
        rates: rates.iter().map(|&r| to_base(r, log_base)).collect(),
        values: points.iter().map(|p| to_base(p.value, log_base)).collect(),
        label: label.to_string(),
        log_base,
        flagged: points.iter().map(|p| p.flagged).collect(),
    })
}

fn fmt_value<F: Real>(v: F) -> String {
    let x = v.to_f64_lossy();
    if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x}")
    }
}

/// Writes `rate,value,label,log_base` rows for each curve in order.
pub fn write_csv<F: Real, W: Write>(out: &mut W, curves: &[ExponentCurve<F>]) -> std::io::Result<()> {
    writeln!(out, "rate,value,label,log_base")?;
    for c in curves {
        let base = c.log_base.to_f64_lossy();
        let base = if (base - std::f64::consts::E).abs() < 1e-12 {
            "e".to_string()
        } else {
            format!("{base}")
        };
        for (r, v) in c.rates.iter().zip(&c.values) {
            writeln!(out, "{},{},{},{}", fmt_value(*r), fmt_value(*v), c.label, base)?;
        }
    }
    Ok(())
}

/// The five curves of the BSC comparison figure, in order:
/// `E_r`, `E1_L{l}`, `E1det_L{l}`, `E2_lambda`, `Esp_shift_lambda`.
/// `rates` and `lambda` are in nats.
pub fn fig1_family<F: Real>(
    w: &Dmc<F>,
    q: &Dist<F>,
    l: u32,
    lambda: F,
    rates: &[F],
    log_base: F,
    cfg: &SolverConfig,
) -> Result<Vec<ExponentCurve<F>>> {
    let base = ExponentQuery {
        channel: w.clone(),
        q: q.clone(),
        rate: F::zero(),
        metric: MetricSpec::Matched(w.clone()),
        list: ListSize::Fixed(l),
        solver: cfg.clone(),
    };
    let exp = ExponentQuery {
        list: ListSize::Exponential(lambda),
        ..base.clone()
    };
    Ok(vec![
        sweep(&base, ExponentKind::RandomCoding, rates, log_base, "E_r")?,
        sweep(&base, ExponentKind::RandomizedList, rates, log_base, &format!("E1_L{l}"))?,
        sweep(&base, ExponentKind::DeterministicList, rates, log_base, &format!("E1det_L{l}"))?,
        sweep(&exp, ExponentKind::RandomizedList, rates, log_base, "E2_lambda")?,
        sweep(&exp, ExponentKind::DeterministicList, rates, log_base, "Esp_shift_lambda")?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::random_coding_exponent;

    fn base() -> ExponentQuery<f64> {
        let w = Dmc::bsc(0.1).unwrap();
        ExponentQuery {
            metric: MetricSpec::Matched(w.clone()),
            channel: w,
            q: Dist::uniform(2).unwrap(),
            rate: 0.0,
            list: ListSize::Fixed(4),
            solver: SolverConfig::default(),
        }
    }

    #[test]
    fn single_point_sweep_matches_scalar() {
        let c = sweep(&base(), ExponentKind::RandomCoding, &[0.1], std::f64::consts::E, "E_r").unwrap();
        let q = base();
        let s = random_coding_exponent(&q.channel, &q.q, 0.1, &q.solver).unwrap();
        assert_eq!(c.values, vec![s]);
        assert_eq!(c.rates, vec![0.1]);
    }

    #[test]
    fn base_two_conversion() {
        let ln2 = 2f64.ln();
        let c = sweep(&base(), ExponentKind::RandomCoding, &[0.0, 0.1 * ln2], 2.0, "E_r").unwrap();
        assert!((c.rates[1] - 0.1).abs() < 1e-15);
        let nats = random_coding_exponent(&base().channel, &base().q, 0.0, &base().solver).unwrap();
        assert!((c.values[0] - nats / ln2).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(sweep(&base(), ExponentKind::RandomCoding, &[0.2, 0.1], 2.0, "x").is_err());
        assert!(sweep(&base(), ExponentKind::RandomCoding, &[], 2.0, "x").is_err());
        assert!(sweep(&base(), ExponentKind::RandomCoding, &[0.1], 1.0, "x").is_err());
    }

    #[test]
    fn csv_layout() {
        let c = ExponentCurve {
            rates: vec![0.0, 0.5],
            values: vec![f64::INFINITY, 0.25],
            label: "Esp".into(),
            log_base: 2.0,
            flagged: vec![false, false],
        };
        let mut buf = Vec::new();
        write_csv(&mut buf, &[c]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "rate,value,label,log_base\n0,inf,Esp,2\n0.5,0.25,Esp,2\n");
    }
}
