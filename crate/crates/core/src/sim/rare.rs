//! Exponent estimates when undetected errors are too rare to observe directly.
//!
//! Block-level behaviour (retransmission rate, stopping time, how often each
//! pattern is sent) comes from protocol trials; the per-pattern probability of
//! accepting a wrong decision comes from importance sampling. They combine as
//! `p_eb = sum_a P(a) miss(a)`, `p_e = p_eb / (1 - q)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bounds::fmt_num;
use crate::sim::confirmation::Pattern;
use crate::sim::estimate::{estimate, TrialStats};
use crate::sim::importance::{importance_sampled_miss, IsEstimate};
use crate::sim::protocol::Scheme;
use crate::sim::SimError;

pub(crate) const IS_STREAM_BASE: u64 = u64::MAX - 2;

#[derive(Debug, Clone, PartialEq)]
pub struct CompositeExponent {
    pub stats: TrialStats,
    /// Fraction of blocks sent under `01, 10, 11`.
    pub pattern_freq: [f64; 3],
    pub miss: [IsEstimate; 3],
    pub p_eb: f64,
    pub p_e: f64,
    /// `-log2(p_e) / E[T]`.
    pub exponent: f64,
}

impl CompositeExponent {
    pub fn record(&self) -> Vec<(&'static str, String)> {
        vec![
            ("composite_p_eb", fmt_num(self.p_eb)),
            ("composite_p_e", fmt_num(self.p_e)),
            ("composite_exponent", fmt_num(self.exponent)),
            ("miss_01", fmt_num(self.miss[0].estimate)),
            ("miss_10", fmt_num(self.miss[1].estimate)),
            ("miss_11", fmt_num(self.miss[2].estimate)),
        ]
    }
}

/// Importance-sampled miss probability of every alternative, on reserved
/// streams of the configuration seed.
pub fn miss_probabilities(scheme: &Scheme, samples: usize, tilt: f64) -> Result<[IsEstimate; 3], SimError> {
    let mut out = Vec::with_capacity(3);
    for a in Pattern::ALTERNATIVES {
        let mut rng = ChaCha8Rng::seed_from_u64(scheme.config().seed);
        rng.set_stream(IS_STREAM_BASE - a.index() as u64);
        out.push(importance_sampled_miss(scheme.tester(), a, samples, tilt, &mut rng)?);
    }
    Ok([out[0], out[1], out[2]])
}

pub fn composite_exponent(
    scheme: &Scheme,
    n_trials: u64,
    is_samples: usize,
    tilt: f64,
    threads: Option<usize>,
) -> Result<CompositeExponent, SimError> {
    let stats = estimate(scheme, n_trials, threads)?;
    let miss = miss_probabilities(scheme, is_samples, tilt)?;
    let pattern_freq = Pattern::ALTERNATIVES.map(|a| stats.pattern_frequency(a));
    let p_eb: f64 = pattern_freq.iter().zip(&miss).map(|(f, m)| f * m.estimate).sum();
    let p_e = if stats.q_hat < 1.0 { p_eb / (1.0 - stats.q_hat) } else { f64::NAN };
    let exponent = if p_e > 0.0 {
        -p_e.log2() / stats.mean_t
    } else {
        f64::INFINITY
    };
    Ok(CompositeExponent {
        stats,
        pattern_freq,
        miss,
        p_eb,
        p_e,
        exponent,
    })
}
