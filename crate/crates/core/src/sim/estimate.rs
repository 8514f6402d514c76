//! Aggregation of independent protocol trials.

use rayon::prelude::*;

use crate::bounds::fmt_num;
use crate::sim::confirmation::Pattern;
use crate::sim::protocol::{run_protocol, trial_rng, Outcome, Scheme, TrialRecord};
use crate::sim::stats::{mean_ci, proportion_se, wilson, Z95};
use crate::sim::SimError;

/// Integer sufficient statistics; merging is associative and commutative, so
/// totals do not depend on trial order or thread count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrialSums {
    pub trials: u64,
    pub completed: u64,
    pub aborted: u64,
    pub undetected: u64,
    pub blocks: u64,
    pub retransmits: u64,
    pub uses: u128,
    pub uses_sq: u128,
    /// Blocks sent under each pattern.
    pub pattern_blocks: [u64; 4],
    /// Accepted blocks under each pattern.
    pub pattern_accepts: [u64; 4],
}

impl TrialSums {
    pub fn from_record(r: &TrialRecord) -> Self {
        let mut s = TrialSums {
            trials: 1,
            blocks: r.blocks,
            ..Default::default()
        };
        match r.outcome {
            Outcome::Aborted => s.aborted = 1,
            Outcome::Correct | Outcome::UndetectedError => {
                s.completed = 1;
                s.uses = r.total_uses as u128;
                s.uses_sq = (r.total_uses as u128).pow(2);
            }
        }
        if r.outcome == Outcome::UndetectedError {
            s.undetected = 1;
        }
        for (h, &acc) in r.h12_history.iter().zip(&r.theta_decisions) {
            s.pattern_blocks[h.index()] += 1;
            if acc {
                s.pattern_accepts[h.index()] += 1;
            } else {
                s.retransmits += 1;
            }
        }
        s
    }

    pub fn merge(mut self, o: Self) -> Self {
        self.trials += o.trials;
        self.completed += o.completed;
        self.aborted += o.aborted;
        self.undetected += o.undetected;
        self.blocks += o.blocks;
        self.retransmits += o.retransmits;
        self.uses += o.uses;
        self.uses_sq += o.uses_sq;
        for i in 0..4 {
            self.pattern_blocks[i] += o.pattern_blocks[i];
            self.pattern_accepts[i] += o.pattern_accepts[i];
        }
        self
    }
}

/// Monte Carlo summary of a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialStats {
    pub sums: TrialSums,
    /// Undetected errors per completed message.
    pub p_e_hat: f64,
    pub p_e_ci: (f64, f64),
    pub mean_t: f64,
    pub mean_t_ci: (f64, f64),
    /// Retransmissions per block.
    pub q_hat: f64,
    pub q_ci: (f64, f64),
    /// Undetected errors per block.
    pub p_eb_hat: f64,
    pub p_eb_ci: (f64, f64),
    /// `-log2(p_e_hat) / mean_t`; `+inf` when no error was observed.
    pub exponent: f64,
    /// `log2 M_i / mean_t`.
    pub rates_realized: (f64, f64),
}

impl TrialStats {
    pub fn from_sums(s: TrialSums, m1: u64, m2: u64) -> Self {
        let p_e_hat = ratio(s.undetected, s.completed);
        let q_hat = ratio(s.retransmits, s.blocks);
        let p_eb_hat = ratio(s.undetected, s.blocks);
        let (mean_t, lo, hi) = mean_ci(s.uses as f64, s.uses_sq as f64, s.completed, Z95);
        let exponent = if p_e_hat > 0.0 {
            -p_e_hat.log2() / mean_t
        } else {
            f64::INFINITY
        };
        TrialStats {
            sums: s,
            p_e_hat,
            p_e_ci: wilson(s.undetected, s.completed, Z95),
            mean_t,
            mean_t_ci: (lo, hi),
            q_hat,
            q_ci: wilson(s.retransmits, s.blocks, Z95),
            p_eb_hat,
            p_eb_ci: wilson(s.undetected, s.blocks, Z95),
            exponent,
            rates_realized: ((m1 as f64).log2() / mean_t, (m2 as f64).log2() / mean_t),
        }
    }

    /// `p_e (1 - q) - p_eb`; zero exactly when no trial aborted.
    pub fn identity_residual(&self) -> f64 {
        self.p_e_hat * (1.0 - self.q_hat) - self.p_eb_hat
    }

    /// 95% half-width propagated (additively) from the three estimates.
    pub fn identity_tolerance(&self) -> f64 {
        let s = &self.sums;
        Z95 * ((1.0 - self.q_hat) * proportion_se(s.undetected, s.completed)
            + self.p_e_hat * proportion_se(s.retransmits, s.blocks)
            + proportion_se(s.undetected, s.blocks))
    }

    pub fn identity_holds(&self) -> bool {
        self.identity_residual().abs() <= self.identity_tolerance() + 1e-15
    }

    /// Flat `key=value` fields in a fixed order.
    pub fn record(&self) -> Vec<(&'static str, String)> {
        let s = &self.sums;
        vec![
            ("trials", s.trials.to_string()),
            ("completed", s.completed.to_string()),
            ("aborted", s.aborted.to_string()),
            ("undetected", s.undetected.to_string()),
            ("blocks", s.blocks.to_string()),
            ("p_e_hat", fmt_num(self.p_e_hat)),
            ("p_e_ci_lo", fmt_num(self.p_e_ci.0)),
            ("p_e_ci_hi", fmt_num(self.p_e_ci.1)),
            ("mean_T", fmt_num(self.mean_t)),
            ("mean_T_ci_lo", fmt_num(self.mean_t_ci.0)),
            ("mean_T_ci_hi", fmt_num(self.mean_t_ci.1)),
            ("q_hat", fmt_num(self.q_hat)),
            ("p_eb_hat", fmt_num(self.p_eb_hat)),
            ("exponent", fmt_num(self.exponent)),
            ("rate1_realized", fmt_num(self.rates_realized.0)),
            ("rate2_realized", fmt_num(self.rates_realized.1)),
        ]
    }

    /// Fraction of blocks sent under pattern `a`.
    pub fn pattern_frequency(&self, a: Pattern) -> f64 {
        ratio(self.sums.pattern_blocks[a.index()], self.sums.blocks)
    }
}

fn ratio(k: u64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        k as f64 / n as f64
    }
}

/// Sums over trials `0..n_trials`, each on its own stream of `cfg.seed`.
pub fn simulate_sums(scheme: &Scheme, n_trials: u64) -> TrialSums {
    let seed = scheme.config().seed;
    (0..n_trials)
        .into_par_iter()
        .map(|t| TrialSums::from_record(&run_protocol(scheme, &mut trial_rng(seed, t))))
        .reduce(TrialSums::default, TrialSums::merge)
}

/// Runs `n_trials` trials, on `threads` workers when given.
pub fn estimate(scheme: &Scheme, n_trials: u64, threads: Option<usize>) -> Result<TrialStats, SimError> {
    if n_trials == 0 {
        return Err(SimError::InvalidConfig("need at least one trial".into()));
    }
    let sums = match threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| SimError::InvalidConfig(format!("thread pool: {e}")))?
            .install(|| simulate_sums(scheme, n_trials)),
        None => simulate_sums(scheme, n_trials),
    };
    let cfg = scheme.config();
    Ok(TrialStats::from_sums(sums, cfg.m1, cfg.m2))
}
