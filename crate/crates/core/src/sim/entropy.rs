//! Posterior entropy of the message pair during the data stage.

use rand::Rng;

use crate::scalar::entropy_bits;
use crate::sim::protocol::{trial_rng, Scheme};
use crate::sim::SimError;

/// Largest `M1 M2` tracked exactly.
pub const TRACE_BUDGET: u64 = 4096;

/// `H(W1, W2 | Y^t)` for `t = 0..=data_len`, in bits.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyTrace {
    pub entropies: Vec<f64>,
}

impl EntropyTrace {
    /// `H_{t} - H_{t+1}` per step.
    pub fn decreases(&self) -> Vec<f64> {
        self.entropies.windows(2).map(|w| w[0] - w[1]).collect()
    }
}

fn normalized_entropy(log_post: &[f64]) -> f64 {
    let mx = log_post.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = log_post.iter().map(|&l| (l - mx).exp2()).collect();
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= z);
    entropy_bits(&p).max(0.0)
}

/// Exact Bayesian posterior over all message pairs, updated per channel use of
/// the time-sharing data stage.
pub fn entropy_drift_trace<R: Rng + ?Sized>(scheme: &Scheme, rng: &mut R) -> Result<EntropyTrace, SimError> {
    let cfg = scheme.config();
    let (book1, book2, hold1, hold2, n1, n2) = scheme
        .time_sharing()
        .ok_or_else(|| SimError::InvalidConfig("entropy trace needs the random-code data stage".into()))?;
    let pairs = cfg.m1.saturating_mul(cfg.m2);
    if pairs > TRACE_BUDGET {
        return Err(SimError::TooLarge {
            size: pairs as f64,
            budget: TRACE_BUDGET as f64,
        });
    }
    let ch = &cfg.channel;
    let (m1, m2) = (cfg.m1 as usize, cfg.m2 as usize);
    let (w1, w2) = (rng.gen_range(0..m1), rng.gen_range(0..m2));
    let mut log_post = vec![0.0; m1 * m2];
    let mut entropies = Vec::with_capacity(n1 + n2 + 1);
    entropies.push(normalized_entropy(&log_post));
    let word = |book: &[Vec<usize>], w: usize, t: usize| book.get(w).map_or(0, |c| c[t]);
    for t in 0..n1 + n2 {
        let first = t < n1;
        let input = |a: usize, b: usize| {
            if first {
                (word(book1, a, t), hold2)
            } else {
                (hold1, word(book2, b, t - n1))
            }
        };
        let (x1, x2) = input(w1, w2);
        let row = ch.row(x1, x2);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut y = row.len() - 1;
        for (k, &q) in row.iter().enumerate() {
            acc += q;
            if u < acc {
                y = k;
                break;
            }
        }
        for a in 0..m1 {
            for b in 0..m2 {
                let (x1, x2) = input(a, b);
                let q = ch.q(y, x1, x2);
                log_post[a * m2 + b] += if q > 1e-300 { q.log2() } else { f64::NEG_INFINITY };
            }
        }
        entropies.push(normalized_entropy(&log_post));
    }
    Ok(EntropyTrace { entropies })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftSummary {
    pub trials: u64,
    pub steps: u64,
    /// Average one-step decrease over all steps of all trials.
    pub mean_decrease: f64,
    /// Average decrease at each time index, across trials.
    pub per_step_mean: Vec<f64>,
}

/// Runs traces on trial streams `0..trials` of the configuration seed.
pub fn entropy_drift_summary(scheme: &Scheme, trials: u64) -> Result<DriftSummary, SimError> {
    let mut per_step: Vec<f64> = Vec::new();
    let mut total = 0.0;
    let mut steps = 0u64;
    for t in 0..trials {
        let tr = entropy_drift_trace(scheme, &mut trial_rng(scheme.config().seed, t))?;
        let d = tr.decreases();
        if per_step.is_empty() {
            per_step = vec![0.0; d.len()];
        }
        for (acc, v) in per_step.iter_mut().zip(&d) {
            *acc += v;
        }
        total += d.iter().sum::<f64>();
        steps += d.len() as u64;
    }
    per_step.iter_mut().for_each(|v| *v /= trials.max(1) as f64);
    Ok(DriftSummary {
        trials,
        steps,
        mean_decrease: if steps > 0 { total / steps as f64 } else { 0.0 },
        per_step_mean: per_step,
    })
}
