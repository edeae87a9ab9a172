//! Decoding metrics `g(P_XY)`, so that a codeword's score is `e^{n g(joint type)}`.

use std::fmt;

use crate::error::{Error, Result};
use crate::prob::{mutual_information, parse_channel, Dmc, JointDist};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub enum MetricSpec<F> {
    /// `Σ P(x,y) ln W(y|x)` with the true channel.
    Matched(Dmc<F>),
    /// `Σ P(x,y) ln V(y|x)` with a decoder-side channel `V`.
    Mismatched(Dmc<F>),
    /// Empirical mutual information.
    Mmi,
    /// A constant, i.e. a decoder that ignores the received word.
    Constant(F),
}

impl<F: Real> MetricSpec<F> {
    /// The channel whose log-likelihood defines an additive metric, if any.
    pub fn additive_channel(&self) -> Option<&Dmc<F>> {
        match self {
            MetricSpec::Matched(w) | MetricSpec::Mismatched(w) => Some(w),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            MetricSpec::Matched(_) => "matched",
            MetricSpec::Mismatched(_) => "mismatched",
            MetricSpec::Mmi => "mmi",
            MetricSpec::Constant(_) => "constant",
        }
    }

    fn check_shape(&self, nx: usize, ny: usize) -> Result<()> {
        if let Some(v) = self.additive_channel() {
            if v.x_size() != nx || v.y_size() != ny {
                return Err(Error::ShapeMismatch {
                    expected: format!("{}x{}", v.x_size(), v.y_size()),
                    found: format!("{nx}x{ny}"),
                });
            }
        }
        Ok(())
    }

    /// Evaluates `g` on a raw row-major table of shape `nx × ny`.
    pub(crate) fn eval_raw(&self, nx: usize, ny: usize, p: &[F]) -> F {
        match self {
            MetricSpec::Matched(v) | MetricSpec::Mismatched(v) => {
                let _ = nx;
                let mut s = F::zero();
                for (i, &pv) in p.iter().enumerate() {
                    if pv > F::zero() {
                        let w = v.matrix()[i];
                        if w <= F::zero() {
                            return F::neg_infinity();
                        }
                        s = s + pv * w.ln();
                    }
                }
                s
            }
            MetricSpec::Mmi => mutual_information(&JointDist::from_raw(nx, ny, p.to_vec())),
            MetricSpec::Constant(c) => *c,
        }
    }
}

impl<F: Real> fmt::Display for MetricSpec<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricSpec::Constant(c) => write!(f, "constant:{c}"),
            other => f.write_str(other.kind()),
        }
    }
}

/// `g(P)`; `-∞` for an additive metric when `P` charges a zero of its channel.
pub fn eval_metric<F: Real>(g: &MetricSpec<F>, p: &JointDist<F>) -> Result<F> {
    g.check_shape(p.x_size(), p.y_size())?;
    Ok(g.eval_raw(p.x_size(), p.y_size(), p.probs()))
}

/// `g(P) − g(P̃)`; an error when both sides are `-∞`.
pub fn metric_gap<F: Real>(g: &MetricSpec<F>, p: &JointDist<F>, p_tilde: &JointDist<F>) -> Result<F> {
    let a = eval_metric(g, p)?;
    let b = eval_metric(g, p_tilde)?;
    let d = a - b;
    if d.is_nan() {
        return Err(Error::IndeterminateGap);
    }
    Ok(d)
}

/// Parses `matched`, `mmi`, `mismatched:<channel>` or `constant:<c>`;
/// `matched` binds to `channel`.
pub fn parse_metric<F: Real>(spec: &str, channel: &Dmc<F>) -> Result<MetricSpec<F>> {
    let spec = spec.trim();
    match spec {
        "matched" => return Ok(MetricSpec::Matched(channel.clone())),
        "mmi" => return Ok(MetricSpec::Mmi),
        _ => {}
    }
    if let Some(rest) = spec.strip_prefix("mismatched:") {
        let v: Dmc<F> = parse_channel(rest)?;
        if v.x_size() != channel.x_size() || v.y_size() != channel.y_size() {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", channel.x_size(), channel.y_size()),
                found: format!("{}x{}", v.x_size(), v.y_size()),
            });
        }
        return Ok(MetricSpec::Mismatched(v));
    }
    if let Some(rest) = spec.strip_prefix("constant:") {
        let c = rest
            .trim()
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("bad constant {rest:?}: {e}")))?;
        if !c.is_finite() {
            return Err(Error::Parse("constant metric must be finite".into()));
        }
        return Ok(MetricSpec::Constant(F::lit(c)));
    }
    Err(Error::Parse(format!("unknown metric {spec:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{entropy, Dist};
    use approx::assert_abs_diff_eq;

    fn bsc_joint(q: &Dist<f64>, p: f64) -> JointDist<f64> {
        JointDist::through_channel(q, &Dmc::bsc(p).unwrap()).unwrap()
    }

    #[test]
    fn eval_examples() {
        let q = Dist::uniform(2).unwrap();
        let prod = JointDist::product(&q, &q);
        assert_eq!(eval_metric(&MetricSpec::Mmi, &prod).unwrap(), 0.0);
        assert_eq!(eval_metric(&MetricSpec::Constant(0.0), &prod).unwrap(), 0.0);
        let w = Dmc::bsc(0.1).unwrap();
        let p = bsc_joint(&q, 0.1);
        let g = eval_metric(&MetricSpec::Matched(w), &p).unwrap();
        assert_abs_diff_eq!(g, -0.325_082_973_391_448_2, epsilon = 1e-12);
    }

    #[test]
    fn gap_examples() {
        let q = Dist::uniform(2).unwrap();
        let w = Dmc::bsc(0.1).unwrap();
        let g = MetricSpec::Matched(w);
        let p = bsc_joint(&q, 0.1);
        assert_eq!(metric_gap(&g, &p, &p).unwrap(), 0.0);
        assert_eq!(metric_gap(&MetricSpec::Constant(1.5), &p, &p.independent_coupling()).unwrap(), 0.0);
        // E_P[ln W] − E_{Q×P_Y}[ln W] = (0.9 ln 0.9 + 0.1 ln 0.1) − ½ ln(0.09).
        let gap = metric_gap(&g, &p, &p.independent_coupling()).unwrap();
        assert_abs_diff_eq!(gap, 0.878_889_830_934_487_9, epsilon = 1e-12);
    }

    #[test]
    fn matched_identity_holds_on_the_channel_slice() {
        // g(P) = I_P − H_P(Y) exactly when P's conditional is the channel itself.
        let w = Dmc::bsc(0.1).unwrap();
        let q = Dist::new(vec![0.3, 0.7]).unwrap();
        let p = JointDist::through_channel(&q, &w).unwrap();
        let g = eval_metric(&MetricSpec::Matched(w), &p).unwrap();
        let rhs = mutual_information(&p) - entropy(&p.y_marginal());
        assert_abs_diff_eq!(g, rhs, epsilon = 1e-12);
    }

    #[test]
    fn zeros_and_indeterminate_gaps() {
        let v = Dmc::noiseless(2).unwrap();
        let g = MetricSpec::Mismatched(v);
        let q = Dist::uniform(2).unwrap();
        let prod = JointDist::product(&q, &q);
        assert_eq!(eval_metric(&g, &prod).unwrap(), f64::NEG_INFINITY);
        assert_eq!(metric_gap(&g, &prod, &prod), Err(Error::IndeterminateGap));
        let diag = JointDist::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert_eq!(metric_gap(&g, &diag, &prod).unwrap(), f64::INFINITY);
    }

    #[test]
    fn parse_forms() {
        let w = Dmc::bsc(0.1).unwrap();
        assert_eq!(parse_metric("matched", &w).unwrap(), MetricSpec::Matched(w.clone()));
        assert_eq!(parse_metric("mmi", &w).unwrap(), MetricSpec::Mmi);
        assert_eq!(parse_metric("constant:-2", &w).unwrap(), MetricSpec::Constant(-2.0));
        assert!(matches!(
            parse_metric("mismatched:bsc:0.2", &w).unwrap(),
            MetricSpec::Mismatched(_)
        ));
        assert!(parse_metric("mismatched:bec:0.2", &w).is_err());
        assert!(parse_metric("likelihood", &w).is_err());
    }
}
