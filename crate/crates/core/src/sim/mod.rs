//! Monte Carlo simulation of constant-composition random codes under list decoding.
//!
//! Message 0 is always sent. Two samplers of the same ensemble are available:
//! [`SimMode::Codebook`] draws every codeword explicitly, while
//! [`SimMode::TypeClass`] draws only the transmitted codeword and the channel
//! output, then samples how many of the `M - 1` competitors fall in each joint
//! type class with `y`. Competitors are i.i.d. uniform on the type class of
//! `Q_n`, so those counts are multinomial with exact hypergeometric class
//! probabilities, and decoder scores depend on a codeword only through its
//! joint type. The second mode handles `M` up to `2^63`.
//!
//! Randomness comes from ChaCha8 ([`rand_chacha::ChaCha8Rng`]). Trials are
//! grouped in blocks of [`BLOCK_TRIALS`]; block `b` uses the generator seeded
//! with `seed` on stream `b`. Blocks run in parallel and are reduced in index
//! order, so results do not depend on the thread count.
//!
//! The simulator works in `f64` only.

mod decoder;
mod fit;

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::exponent::ListSize;
use crate::metric::MetricSpec;
use crate::prob::{enumerate_joint_types, quantize_to_type, Dist, Dmc, TypeDist};
use crate::scalar::log_sum_exp;

pub use decoder::{
    canonical_sequence, channel_sample, decode_deterministic_list, decode_randomized_list,
    generate_codeword, joint_counts, log_weight, softmax, ChannelSampler,
};
pub use fit::{estimate_exponent, fit_exponent, ExponentFit, FitPoint};

/// Trials per RNG stream.
pub const BLOCK_TRIALS: u64 = 4096;
/// Largest `M·n` the codebook sampler will hold in memory.
pub const MAX_CODEBOOK_SYMBOLS: u64 = 1 << 24;
/// Largest list size accepted.
pub const MAX_LIST: u64 = 1 << 32;
/// Above this many codebook symbols, [`SimMode::Auto`] switches to type classes.
const AUTO_CODEBOOK_SYMBOLS: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoder {
    Randomized,
    DeterministicTopL,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    #[default]
    Auto,
    Codebook,
    TypeClass,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub channel: Dmc<f64>,
    pub q: Dist<f64>,
    /// Block length.
    pub n: usize,
    /// Rate in nats per symbol; `M = ⌊e^{nR}⌋`.
    pub rate: f64,
    pub list: ListSize<f64>,
    pub metric: MetricSpec<f64>,
    pub decoder: Decoder,
    pub trials: u64,
    /// Consecutive trials sharing one codebook (codebook mode only).
    pub batch_size: u64,
    pub seed: u64,
    /// Average `(1 - softmax_0)^L` instead of the sampled error indicator.
    pub rao_blackwell: bool,
    pub mode: SimMode,
}

impl SimConfig {
    pub fn new(channel: Dmc<f64>, q: Dist<f64>, n: usize, rate: f64, list: ListSize<f64>, metric: MetricSpec<f64>) -> Self {
        Self {
            channel,
            q,
            n,
            rate,
            list,
            metric,
            decoder: Decoder::Randomized,
            trials: 100_000,
            batch_size: 1,
            seed: 0,
            rao_blackwell: true,
            mode: SimMode::Auto,
        }
    }

    /// Number of messages `⌊e^{nR}⌋`.
    pub fn messages(&self) -> Result<u64> {
        let nr = self.n as f64 * self.rate;
        if !nr.is_finite() || nr < 0.0 {
            return Err(Error::InvalidParameter(format!("invalid n·R = {nr}")));
        }
        if nr >= 63.0 * std::f64::consts::LN_2 {
            return Err(Error::ResourceCap(format!("M = e^{nr} exceeds 2^63")));
        }
        let m = nr.exp().floor() as u64;
        if m < 2 {
            return Err(Error::InvalidParameter(format!("M = {m}; need at least 2 messages")));
        }
        Ok(m)
    }

    /// List size at this block length.
    pub fn list_size(&self) -> Result<u64> {
        match self.list {
            ListSize::Fixed(l) if l >= 1 => Ok(l as u64),
            ListSize::Fixed(_) => Err(Error::InvalidParameter("list size must be at least 1".into())),
            ListSize::Exponential(lambda) => {
                let nl = self.n as f64 * lambda;
                if !nl.is_finite() || nl < 0.0 {
                    return Err(Error::InvalidParameter(format!("invalid n·λ = {nl}")));
                }
                if nl >= 32.0 * std::f64::consts::LN_2 {
                    return Err(Error::ResourceCap(format!("L = e^{nl} exceeds 2^32")));
                }
                Ok((nl.exp().floor() as u64).max(1))
            }
        }
    }

    fn resolve_mode(&self, m: u64) -> Result<SimMode> {
        let symbols = m.checked_mul(self.n as u64);
        match self.mode {
            SimMode::TypeClass => Ok(SimMode::TypeClass),
            SimMode::Codebook => match symbols {
                Some(s) if s <= MAX_CODEBOOK_SYMBOLS => Ok(SimMode::Codebook),
                _ => Err(Error::ResourceCap(format!(
                    "codebook of {m} words of length {} exceeds {MAX_CODEBOOK_SYMBOLS} symbols",
                    self.n
                ))),
            },
            SimMode::Auto => Ok(match symbols {
                Some(s) if s <= AUTO_CODEBOOK_SYMBOLS => SimMode::Codebook,
                _ => SimMode::TypeClass,
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("block length must be positive".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter("batch size must be at least 1".into()));
        }
        if self.q.len() != self.channel.x_size() {
            return Err(Error::ShapeMismatch {
                expected: format!("input distribution of size {}", self.channel.x_size()),
                found: format!("size {}", self.q.len()),
            });
        }
        if let Some(v) = self.metric.additive_channel() {
            if v.x_size() != self.channel.x_size() || v.y_size() != self.channel.y_size() {
                return Err(Error::ShapeMismatch {
                    expected: format!("{}x{} metric channel", self.channel.x_size(), self.channel.y_size()),
                    found: format!("{}x{}", v.x_size(), v.y_size()),
                });
            }
        }
        let m = self.messages()?;
        let l = self.list_size()?;
        if self.decoder == Decoder::DeterministicTopL && l > m {
            return Err(Error::InvalidParameter(format!("list size {l} exceeds M = {m}")));
        }
        quantize_to_type(&self.q, self.n as u64)?;
        self.resolve_mode(m)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub p_hat: f64,
    pub stderr: f64,
    pub trials: u64,
    /// Sampled error count, or the rounded sum of conditional error
    /// probabilities when Rao-Blackwellized.
    pub errors_observed: u64,
    /// `-ln p̂ / n`, absent when `p̂ = 0`.
    pub empirical_exponent: Option<f64>,
    pub rao_blackwellized: bool,
    pub mode: SimMode,
    pub messages: u64,
    pub list_size: u64,
    pub n: usize,
}

/// Running mean and centred second moment, merged pairwise.
#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    mean: f64,
    m2: f64,
    sum: f64,
    hits: u64,
    trials: u64,
}

impl Acc {
    fn push(&mut self, v: f64, hit: bool) {
        self.trials += 1;
        self.sum += v;
        let d = v - self.mean;
        self.mean += d / self.trials as f64;
        self.m2 += d * (v - self.mean);
        self.hits += hit as u64;
    }

    fn merge(&mut self, o: &Acc) {
        if o.trials == 0 {
            return;
        }
        let (na, nb) = (self.trials as f64, o.trials as f64);
        let d = o.mean - self.mean;
        let nt = na + nb;
        self.mean += d * nb / nt;
        self.m2 += o.m2 + d * d * na * nb / nt;
        self.sum += o.sum;
        self.hits += o.hits;
        self.trials += o.trials;
    }
}

/// What one trial needs to know about the received word: the transmitted
/// score and the competitors' log-weights.
struct Outcome {
    /// `ln Σ_{m≥1} e^{s_m}`.
    lse_competitors: f64,
    s0: f64,
    /// Competitors scoring strictly above the transmitted codeword.
    beaten_by: u64,
}

struct Shared<'a> {
    cfg: &'a SimConfig,
    m: u64,
    l: u64,
    nx: usize,
    ny: usize,
    q_type: TypeDist,
    sampler: ChannelSampler,
}

impl Shared<'_> {
    fn score(&self, counts: &[u64]) -> f64 {
        log_weight(&self.cfg.metric, counts, self.nx, self.ny)
    }

    /// Returns the per-trial estimator value and whether an error was sampled.
    fn trial_value<R: Rng>(&self, o: &Outcome, rng: &mut R) -> Result<(f64, bool)> {
        match self.cfg.decoder {
            Decoder::DeterministicTopL => {
                let hit = o.beaten_by >= self.l;
                Ok((hit as u8 as f64, hit))
            }
            Decoder::Randomized => {
                let lse_all = log_sum_exp([o.s0, o.lse_competitors]);
                if lse_all == f64::NEG_INFINITY {
                    return Err(Error::InvalidParameter("every decoding weight is zero".into()));
                }
                // ln(1 - softmax_0)
                let log_miss = o.lse_competitors - lse_all;
                let cond = (self.l as f64 * log_miss).exp();
                // L independent draws all miss message 0 with probability `cond`.
                let hit = rng.random::<f64>() < cond;
                if self.cfg.rao_blackwell {
                    Ok((cond, hit))
                } else {
                    Ok((hit as u8 as f64, hit))
                }
            }
        }
    }
}

/// Hypergeometric law of the joint type of a uniform member of `T(Q_n)`
/// against a fixed `y`, with the metric score of each class.
struct ClassTable {
    log_w: Vec<f64>,
    /// `P(class) / P(class or later)`, the sequential binomial success probability.
    cond_p: Vec<f64>,
    scores: Vec<f64>,
}

impl ClassTable {
    fn build(sh: &Shared<'_>, y_counts: &[u64]) -> Result<Self> {
        let n = sh.cfg.n as u64;
        let y_type = TypeDist::from_counts(y_counts.to_vec())?;
        let rows = sh.q_type.counts();
        let log_class: f64 = ln_factorial(n) - rows.iter().map(|&k| ln_factorial(k)).sum::<f64>();
        let log_cols: f64 = y_counts.iter().map(|&c| ln_factorial(c)).sum();
        let mut log_p = Vec::new();
        let mut scores = Vec::new();
        for t in enumerate_joint_types(sh.nx, sh.ny, n, Some(&sh.q_type), Some(&y_type))? {
            let c = t.counts();
            let lp = log_cols - c.iter().map(|&v| ln_factorial(v)).sum::<f64>() - log_class;
            log_p.push(lp);
            scores.push(sh.score(c));
        }
        if log_p.is_empty() {
            return Err(Error::Solver("no joint type matches the received word".into()));
        }
        let z = log_sum_exp(log_p.iter().copied());
        let p: Vec<f64> = log_p.iter().map(|&v| (v - z).exp()).collect();
        let mut tail = vec![0.0; p.len() + 1];
        for i in (0..p.len()).rev() {
            tail[i] = tail[i + 1] + p[i];
        }
        let cond_p = p
            .iter()
            .zip(&tail)
            .map(|(&pi, &ti)| if ti > 0.0 { (pi / ti).clamp(0.0, 1.0) } else { 1.0 })
            .collect();
        Ok(Self {
            log_w: scores.clone(),
            cond_p,
            scores,
        })
    }
}

fn run_codebook_block(sh: &Shared<'_>, rng: &mut ChaCha8Rng, trials: u64) -> Result<Acc> {
    let mut acc = Acc::default();
    let mut book: Vec<Vec<usize>> = Vec::new();
    for t in 0..trials {
        if t % sh.cfg.batch_size == 0 {
            book = (0..sh.m).map(|_| generate_codeword(&sh.q_type, rng)).collect();
        }
        let y = sh.sampler.sample(&book[0], rng);
        let s0 = sh.score(&joint_counts(&book[0], &y, sh.nx, sh.ny));
        let rest: Vec<f64> = book[1..]
            .iter()
            .map(|x| sh.score(&joint_counts(x, &y, sh.nx, sh.ny)))
            .collect();
        let o = Outcome {
            lse_competitors: log_sum_exp(rest.iter().copied()),
            s0,
            beaten_by: rest.iter().filter(|&&s| s > s0).count() as u64,
        };
        let (v, hit) = sh.trial_value(&o, rng)?;
        acc.push(v, hit);
    }
    Ok(acc)
}

fn run_type_class_block(sh: &Shared<'_>, rng: &mut ChaCha8Rng, trials: u64) -> Result<Acc> {
    let mut acc = Acc::default();
    let mut cache: HashMap<Vec<u64>, ClassTable> = HashMap::new();
    let x0 = canonical_sequence(&sh.q_type);
    let mut weights = Vec::new();
    for _ in 0..trials {
        let y = sh.sampler.sample(&x0, rng);
        let mut y_counts = vec![0u64; sh.ny];
        for &b in &y {
            y_counts[b] += 1;
        }
        let s0 = sh.score(&joint_counts(&x0, &y, sh.nx, sh.ny));
        if !cache.contains_key(&y_counts) {
            let table = ClassTable::build(sh, &y_counts)?;
            cache.insert(y_counts.clone(), table);
        }
        let table = &cache[&y_counts];
        let mut left = sh.m - 1;
        let mut beaten_by = 0u64;
        weights.clear();
        for (i, &p) in table.cond_p.iter().enumerate() {
            if left == 0 {
                break;
            }
            let k = if p >= 1.0 {
                left
            } else if p <= 0.0 {
                0
            } else {
                Binomial::new(left, p).map_err(|e| Error::Solver(e.to_string()))?.sample(rng)
            };
            if k > 0 {
                left -= k;
                weights.push(table.log_w[i] + (k as f64).ln());
                if table.scores[i] > s0 {
                    beaten_by += k;
                }
            }
        }
        let o = Outcome {
            lse_competitors: log_sum_exp(weights.iter().copied()),
            s0,
            beaten_by,
        };
        let (v, hit) = sh.trial_value(&o, rng)?;
        acc.push(v, hit);
    }
    Ok(acc)
}

/// Estimates the ensemble-average list error probability `p̄_e(n, L)`.
pub fn estimate_error_probability(cfg: &SimConfig) -> Result<SimEstimate> {
    cfg.validate()?;
    let m = cfg.messages()?;
    let l = cfg.list_size()?;
    let mode = cfg.resolve_mode(m)?;
    let (nx, ny) = (cfg.channel.x_size(), cfg.channel.y_size());
    let sh = Shared {
        cfg,
        m,
        l,
        nx,
        ny,
        q_type: quantize_to_type(&cfg.q, cfg.n as u64)?,
        sampler: ChannelSampler::new(&cfg.channel),
    };
    let blocks = cfg.trials.div_ceil(BLOCK_TRIALS);
    let parts: Vec<Result<Acc>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(b);
            let count = BLOCK_TRIALS.min(cfg.trials - b * BLOCK_TRIALS);
            match mode {
                SimMode::Codebook => run_codebook_block(&sh, &mut rng, count),
                _ => run_type_class_block(&sh, &mut rng, count),
            }
        })
        .collect();
    let mut acc = Acc::default();
    for p in parts {
        acc.merge(&p?);
    }
    let nt = acc.trials as f64;
    let p_hat = acc.mean.clamp(0.0, 1.0);
    let var = acc.m2.max(0.0) / nt;
    let errors_observed = if cfg.rao_blackwell && cfg.decoder == Decoder::Randomized {
        acc.sum.round() as u64
    } else {
        acc.hits
    };
    Ok(SimEstimate {
        p_hat,
        stderr: (var / nt).sqrt(),
        trials: acc.trials,
        errors_observed,
        empirical_exponent: (p_hat > 0.0).then(|| -p_hat.ln() / cfg.n as f64),
        rao_blackwellized: cfg.rao_blackwell && cfg.decoder == Decoder::Randomized,
        mode,
        messages: m,
        list_size: l,
        n: cfg.n,
    })
}
