//! Least-squares fit of `-ln p̂` against block length.

use serde::{Deserialize, Serialize};

use super::{estimate_error_probability, SimConfig, SimEstimate};
use crate::error::{Error, Result};

const Z95: f64 = 1.959963984540054;
/// Points with fewer error events are kept but marked.
pub const MIN_EVENTS: u64 = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub n: usize,
    pub p_hat: f64,
    pub stderr: f64,
    pub errors_observed: u64,
    /// `-ln p̂` with a delta-method 95% interval.
    pub neg_log_p: Option<f64>,
    pub ci95: Option<(f64, f64)>,
    pub used: bool,
    pub low_events: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    /// Nats per symbol.
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub slope_ci95: (f64, f64),
    pub points: Vec<FitPoint>,
    pub estimates: Vec<SimEstimate>,
}

/// Fits `-ln p̂ = a + slope·n` over `(n, p̂, stderr, errors)` tuples.
/// Points with `p̂ = 0` are dropped and reported as unused.
pub fn fit_exponent(data: &[(usize, f64, f64, u64)]) -> Result<ExponentFit> {
    let points: Vec<FitPoint> = data
        .iter()
        .map(|&(n, p, se, errors)| {
            let used = p > 0.0;
            let y = used.then(|| -p.ln());
            let half = Z95 * se / p;
            FitPoint {
                n,
                p_hat: p,
                stderr: se,
                errors_observed: errors,
                neg_log_p: y,
                ci95: y.map(|y| (y - half, y + half)),
                used,
                low_events: errors < MIN_EVENTS,
            }
        })
        .collect();
    let used: Vec<&FitPoint> = points.iter().filter(|p| p.used).collect();
    if used.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} block lengths with observed errors; need at least 2",
            used.len()
        )));
    }
    let k = used.len() as f64;
    let n_bar = used.iter().map(|p| p.n as f64).sum::<f64>() / k;
    let y_bar = used.iter().map(|p| p.neg_log_p.unwrap()).sum::<f64>() / k;
    let sxx: f64 = used.iter().map(|p| (p.n as f64 - n_bar).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("block lengths must differ".into()));
    }
    let weights: Vec<f64> = used.iter().map(|p| (p.n as f64 - n_bar) / sxx).collect();
    let slope: f64 = used.iter().zip(&weights).map(|(p, w)| w * p.neg_log_p.unwrap()).sum();
    let var: f64 = used
        .iter()
        .zip(&weights)
        .map(|(p, w)| (w * p.stderr / p.p_hat).powi(2))
        .sum();
    let sd = var.sqrt();
    Ok(ExponentFit {
        slope,
        intercept: y_bar - slope * n_bar,
        slope_stderr: sd,
        slope_ci95: (slope - Z95 * sd, slope + Z95 * sd),
        points,
        estimates: Vec::new(),
    })
}

/// Runs the simulator at each block length and fits the decay rate.
/// Block length `n_grid[i]` uses seed `cfg.seed + i`.
pub fn estimate_exponent(cfg: &SimConfig, n_grid: &[usize]) -> Result<ExponentFit> {
    if n_grid.len() < 3 {
        return Err(Error::InvalidParameter("need at least 3 block lengths".into()));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("block lengths must be strictly increasing".into()));
    }
    let mut estimates = Vec::with_capacity(n_grid.len());
    for (i, &n) in n_grid.iter().enumerate() {
        let mut c = cfg.clone();
        c.n = n;
        c.seed = cfg.seed.wrapping_add(i as u64);
        estimates.push(estimate_error_probability(&c)?);
    }
    let data: Vec<_> = estimates
        .iter()
        .map(|e| (e.n, e.p_hat, e.stderr, e.errors_observed))
        .collect();
    let mut fit = fit_exponent(&data)?;
    fit.estimates = estimates;
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential_decay() {
        let data: Vec<_> = [10usize, 20, 40].iter().map(|&n| (n, (-0.3 * n as f64).exp(), 0.0, 100)).collect();
        let fit = fit_exponent(&data).unwrap();
        assert!((fit.slope - 0.3).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-10);
    }

    #[test]
    fn zero_points_dropped() {
        let data = vec![(10, 0.1, 0.01, 100), (20, 0.01, 0.001, 100), (30, 0.0, 0.0, 0)];
        let fit = fit_exponent(&data).unwrap();
        assert!(!fit.points[2].used);
        assert!(fit.points[2].low_events);
        assert!(fit_exponent(&data[1..]).is_err());
    }
}
