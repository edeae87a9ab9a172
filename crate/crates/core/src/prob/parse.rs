//! Text and JSON forms of channels and input distributions.
//!
//! Channels: `bsc:<p>`, `bec:<e>`, `noiseless:<k>`, or a JSON object
//! `{"x_size":k, "y_size":m, "rows":[[...], ...]}`.
//! Distributions: `uniform`, a comma-separated list, or a JSON array.

use serde::{Deserialize, Serialize};

use super::{Dist, Dmc};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelJson {
    pub x_size: usize,
    pub y_size: usize,
    pub rows: Vec<Vec<f64>>,
}

impl<F: Real> TryFrom<&ChannelJson> for Dmc<F> {
    type Error = Error;

    fn try_from(c: &ChannelJson) -> Result<Self> {
        if c.rows.len() != c.x_size || c.rows.iter().any(|r| r.len() != c.y_size) {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", c.x_size, c.y_size),
                found: "rows of a different shape".into(),
            });
        }
        let rows: Vec<Vec<F>> = c
            .rows
            .iter()
            .map(|r| r.iter().map(|&v| F::lit(v)).collect())
            .collect();
        Dmc::from_rows(&rows)
    }
}

impl<F: Real> From<&Dmc<F>> for ChannelJson {
    fn from(w: &Dmc<F>) -> Self {
        ChannelJson {
            x_size: w.x_size(),
            y_size: w.y_size(),
            rows: w
                .rows()
                .into_iter()
                .map(|r| r.into_iter().map(|v| v.to_f64_lossy()).collect())
                .collect(),
        }
    }
}

fn parse_num(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("bad number {s:?}: {e}")))
}

pub fn parse_channel<F: Real>(spec: &str) -> Result<Dmc<F>> {
    let spec = spec.trim();
    if spec.starts_with('{') {
        let c: ChannelJson =
            serde_json::from_str(spec).map_err(|e| Error::Parse(e.to_string()))?;
        return Dmc::try_from(&c);
    }
    let (kind, arg) = spec
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("unknown channel {spec:?}")))?;
    match kind {
        "bsc" => {
            let p = parse_num(arg)?;
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Parse(format!("crossover {p} outside [0,1]")));
            }
            Dmc::bsc(F::lit(p))
        }
        "bec" => {
            let e = parse_num(arg)?;
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::Parse(format!("erasure {e} outside [0,1]")));
            }
            Dmc::bec(F::lit(e))
        }
        "noiseless" => {
            let k = arg
                .trim()
                .parse::<usize>()
                .map_err(|e| Error::Parse(e.to_string()))?;
            Dmc::noiseless(k)
        }
        _ => Err(Error::Parse(format!("unknown channel kind {kind:?}"))),
    }
}

/// Parses an input distribution over an alphabet of `size` symbols.
pub fn parse_dist<F: Real>(spec: &str, size: usize) -> Result<Dist<F>> {
    let spec = spec.trim();
    if spec == "uniform" {
        return Dist::uniform(size);
    }
    let values: Vec<f64> = if spec.starts_with('[') {
        serde_json::from_str(spec).map_err(|e| Error::Parse(e.to_string()))?
    } else {
        spec.split(',').map(parse_num).collect::<Result<_>>()?
    };
    if values.len() != size {
        return Err(Error::ShapeMismatch {
            expected: format!("{size} probabilities"),
            found: format!("{}", values.len()),
        });
    }
    Dist::new(values.into_iter().map(F::lit).collect())
}
