//! Codeword generation, channel sampling and the two list decoders.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::metric::MetricSpec;
use crate::prob::{Dmc, TypeDist};
use crate::scalar::log_sum_exp;

/// A uniform draw from the type class of `q_type`: the fixed multiset of
/// symbols in a uniformly random order.
pub fn generate_codeword<R: Rng + ?Sized>(q_type: &TypeDist, rng: &mut R) -> Vec<usize> {
    let mut x = canonical_sequence(q_type);
    x.shuffle(rng);
    x
}

/// The sorted member of the type class: all zeros first, then all ones, and so on.
pub fn canonical_sequence(q_type: &TypeDist) -> Vec<usize> {
    let mut x = Vec::with_capacity(q_type.denominator() as usize);
    for (a, &c) in q_type.counts().iter().enumerate() {
        x.extend(std::iter::repeat_n(a, c as usize));
    }
    x
}

/// Per-row samplers for a channel.
pub struct ChannelSampler {
    rows: Vec<WeightedIndex<f64>>,
}

impl ChannelSampler {
    pub fn new(w: &Dmc<f64>) -> Self {
        let rows = (0..w.x_size())
            .map(|x| WeightedIndex::new(w.row(x)).expect("channel rows are valid distributions"))
            .collect();
        Self { rows }
    }

    pub fn sample<R: Rng + ?Sized>(&self, x: &[usize], rng: &mut R) -> Vec<usize> {
        x.iter().map(|&a| self.rows[a].sample(rng)).collect()
    }
}

/// Passes `x` through `w` symbol by symbol.
pub fn channel_sample<R: Rng + ?Sized>(w: &Dmc<f64>, x: &[usize], rng: &mut R) -> Result<Vec<usize>> {
    if let Some(&bad) = x.iter().find(|&&a| a >= w.x_size()) {
        return Err(Error::InvalidParameter(format!("input symbol {bad} out of range")));
    }
    Ok(ChannelSampler::new(w).sample(x, rng))
}

/// Joint type counts of `(x, y)`, row-major.
pub fn joint_counts(x: &[usize], y: &[usize], nx: usize, ny: usize) -> Vec<u64> {
    let mut c = vec![0u64; nx * ny];
    for (&a, &b) in x.iter().zip(y) {
        c[a * ny + b] += 1;
    }
    c
}

/// `n · g(joint type)`, the log of the decoding weight `e^{n g}`.
pub fn log_weight(g: &MetricSpec<f64>, counts: &[u64], nx: usize, ny: usize) -> f64 {
    let n: u64 = counts.iter().sum();
    let nf = n as f64;
    let p: Vec<f64> = counts.iter().map(|&c| c as f64 / nf).collect();
    nf * g.eval_raw(nx, ny, &p)
}

fn scores(codebook: &[Vec<usize>], y: &[usize], g: &MetricSpec<f64>, nx: usize, ny: usize) -> Result<Vec<f64>> {
    if codebook.is_empty() {
        return Err(Error::InvalidParameter("empty codebook".into()));
    }
    if codebook.iter().any(|x| x.len() != y.len()) {
        return Err(Error::ShapeMismatch {
            expected: format!("codewords of length {}", y.len()),
            found: "a codeword of another length".into(),
        });
    }
    Ok(codebook
        .iter()
        .map(|x| log_weight(g, &joint_counts(x, y, nx, ny), nx, ny))
        .collect())
}

fn alphabet_sizes(g: &MetricSpec<f64>, codebook: &[Vec<usize>], y: &[usize]) -> (usize, usize) {
    match g.additive_channel() {
        Some(v) => (v.x_size(), v.y_size()),
        None => {
            let nx = codebook.iter().flatten().copied().max().unwrap_or(0) + 1;
            let ny = y.iter().copied().max().unwrap_or(0) + 1;
            (nx, ny)
        }
    }
}

/// Normalized decoding probabilities `e^{s_m} / Σ_j e^{s_j}`, computed after
/// subtracting the largest score.
pub fn softmax(scores: &[f64]) -> Result<Vec<f64>> {
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Err(Error::InvalidParameter("every decoding weight is zero".into()));
    }
    let lse = log_sum_exp(scores.iter().copied());
    Ok(scores.iter().map(|&s| (s - lse).exp()).collect())
}

/// `L` independent draws of a message index, each with probability
/// proportional to `e^{n g(P̂_{x_m, y})}`. Indices are 0-based.
pub fn decode_randomized_list<R: Rng + ?Sized>(
    codebook: &[Vec<usize>],
    y: &[usize],
    g: &MetricSpec<f64>,
    l: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let (nx, ny) = alphabet_sizes(g, codebook, y);
    let s = scores(codebook, y, g, nx, ny)?;
    let probs = softmax(&s)?;
    let dist = WeightedIndex::new(&probs).map_err(|e| Error::Solver(e.to_string()))?;
    Ok((0..l).map(|_| dist.sample(rng)).collect())
}

/// The `L` messages with the highest metrics, ties broken toward the lower index.
pub fn decode_deterministic_list(
    codebook: &[Vec<usize>],
    y: &[usize],
    g: &MetricSpec<f64>,
    l: usize,
) -> Result<Vec<usize>> {
    if codebook.len() < l {
        return Err(Error::InvalidParameter(format!(
            "list size {l} exceeds codebook size {}",
            codebook.len()
        )));
    }
    let (nx, ny) = alphabet_sizes(g, codebook, y);
    let s = scores(codebook, y, g, nx, ny)?;
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    idx.truncate(l);
    Ok(idx)
}
