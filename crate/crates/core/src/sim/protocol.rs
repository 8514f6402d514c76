//! The two-stage transmission scheme with retransmission, one message per trial.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::info::QuadDistribution;
use crate::sim::confirmation::{build_confirmation_code, ConfirmationCode, ConfirmationTester, Pattern, TestRule};
use crate::sim::exact::{exact_confirmation_stats, sample_block};
use crate::sim::SimError;
use crate::Channel;

pub const DEFAULT_MAX_BLOCKS: usize = 10_000;
/// Cap on `M_i * n` for explicit random codebooks.
pub const CODEBOOK_BUDGET: u64 = 1 << 26;

/// Streams reserved for per-configuration randomness; trials use `0..trials`.
pub(crate) const CODE_STREAM: u64 = u64::MAX;
pub(crate) const CODEBOOK_STREAM: u64 = u64::MAX - 1;

/// How the first stage produces the tentative decision `(W1^, W2^)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DataStageMode {
    /// Each user in turn sends a random codeword over its own share of the
    /// data window while the other holds a fixed letter; ML decoding per share.
    RandomCodeTimeSharing,
    /// The decision is wrong with probability `zeta`, uniformly over wrong pairs.
    Genie { zeta: f64 },
}

impl DataStageMode {
    pub fn name(&self) -> &'static str {
        match self {
            DataStageMode::RandomCodeTimeSharing => "random-code",
            DataStageMode::Genie { .. } => "genie",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub channel: Channel,
    pub m1: u64,
    pub m2: u64,
    /// Channel uses per block (data + confirmation).
    pub n: usize,
    /// Fraction of the block used for confirmation.
    pub gamma: f64,
    pub data_stage: DataStageMode,
    pub rule: TestRule,
    /// Target joint type of the confirmation codewords.
    pub quad_dist: QuadDistribution<f64>,
    pub seed: u64,
    pub max_blocks: usize,
}

impl SchemeConfig {
    /// Confirmation length `ceil(n gamma)`.
    pub fn confirmation_len(&self) -> usize {
        ((self.n as f64 * self.gamma) - 1e-9).ceil().max(0.0) as usize
    }

    pub fn data_len(&self) -> usize {
        self.n.saturating_sub(self.confirmation_len())
    }

    /// `log2 M_i / n`.
    pub fn nominal_rates(&self) -> (f64, f64) {
        let n = self.n as f64;
        ((self.m1 as f64).log2() / n, (self.m2 as f64).log2() / n)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if self.m1 == 0 || self.m2 == 0 {
            return bad("message-set sizes must be at least 1");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if self.confirmation_len() == 0 {
            return bad("n * gamma must be at least 1");
        }
        if self.confirmation_len() > self.n {
            return bad("confirmation longer than the block");
        }
        if self.max_blocks == 0 {
            return bad("max_blocks must be at least 1");
        }
        if self.quad_dist.dims() != (self.channel.nx1(), self.channel.nx2()) {
            return bad("quadruple law does not match the channel alphabets");
        }
        if let DataStageMode::Genie { zeta } = self.data_stage {
            if !(0.0..=1.0).contains(&zeta) {
                return bad("zeta must lie in [0, 1]");
            }
        }
        Ok(())
    }
}

/// Outcome of one message transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Correct,
    UndetectedError,
    Aborted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    /// Realized stopping time in channel uses.
    pub total_uses: u64,
    pub blocks: u64,
    pub outcome: Outcome,
    /// `(H1, H2)` sent in each block.
    pub h12_history: Vec<Pattern>,
    /// Whether each block was accepted.
    pub theta_decisions: Vec<bool>,
}

#[derive(Debug, Clone)]
struct TimeSharing {
    n1: usize,
    n2: usize,
    /// Letter held by the idle user.
    hold1: usize,
    hold2: usize,
    book1: Vec<Vec<usize>>,
    book2: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
enum DataStage {
    Genie { zeta: f64, weights: [f64; 3] },
    Random(TimeSharing),
}

/// A configuration with its confirmation code and codebooks drawn.
#[derive(Debug, Clone)]
pub struct Scheme {
    cfg: SchemeConfig,
    code: ConfirmationCode,
    tester: ConfirmationTester,
    data: DataStage,
}

/// Probability split of a wrong tentative decision over `01, 10, 11`.
pub fn wrong_pair_weights(m1: u64, m2: u64) -> [f64; 3] {
    let (a, b) = (m1 as f64, m2 as f64);
    let wrong = a * b - 1.0;
    if wrong <= 0.0 {
        return [0.0; 3];
    }
    [(b - 1.0) / wrong, (a - 1.0) / wrong, (a - 1.0) * (b - 1.0) / wrong]
}

fn pick_categorical(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn best_hold_letter(ch: &Channel, user1: bool) -> (usize, f64, Vec<f64>) {
    let others = if user1 { ch.nx2() } else { ch.nx1() };
    let mut best = (0, f64::NEG_INFINITY, vec![]);
    for h in 0..others {
        let ptp = if user1 { ch.marginal_user1(h) } else { ch.marginal_user2(h) };
        let (c, px) = ptp.capacity();
        if c > best.1 + 1e-12 {
            best = (h, c, px);
        }
    }
    best
}

fn shares(data_len: usize, m1: u64, m2: u64) -> (usize, usize) {
    let (l1, l2) = ((m1 as f64).log2(), (m2 as f64).log2());
    let n1 = if l1 + l2 > 0.0 {
        (data_len as f64 * l1 / (l1 + l2)).round() as usize
    } else {
        data_len / 2
    };
    (n1, data_len - n1)
}

impl Scheme {
    pub fn new(cfg: SchemeConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let ch = &cfg.channel;
        let mut code_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        code_rng.set_stream(CODE_STREAM);
        let code = build_confirmation_code(ch, &cfg.quad_dist, cfg.confirmation_len(), &mut code_rng)?;
        let tester = ConfirmationTester::new(ch, &code, cfg.rule)?;
        let data = match cfg.data_stage {
            DataStageMode::Genie { zeta } => DataStage::Genie {
                zeta,
                weights: wrong_pair_weights(cfg.m1, cfg.m2),
            },
            DataStageMode::RandomCodeTimeSharing => {
                let (n1, n2) = shares(cfg.data_len(), cfg.m1, cfg.m2);
                let (hold2, c1, px1) = best_hold_letter(ch, true);
                let (hold1, c2, px2) = best_hold_letter(ch, false);
                for (m, share, c, who) in [(cfg.m1, n1, c1, 1), (cfg.m2, n2, c2, 2)] {
                    if m > 1 && (m as f64).log2() >= share as f64 * c {
                        return Err(SimError::InvalidConfig(format!(
                            "user {who}: log2 M = {} bits does not fit {share} uses at capacity {c:.4}",
                            (m as f64).log2()
                        )));
                    }
                    if m.saturating_mul(share.max(1) as u64) > CODEBOOK_BUDGET {
                        return Err(SimError::TooLarge {
                            size: m as f64 * share as f64,
                            budget: CODEBOOK_BUDGET as f64,
                        });
                    }
                }
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(CODEBOOK_STREAM);
                let mut draw = |m: u64, len: usize, px: &[f64]| -> Vec<Vec<usize>> {
                    (0..m)
                        .map(|_| (0..len).map(|_| pick_categorical(px, rng.gen())).collect())
                        .collect()
                };
                let book1 = draw(cfg.m1, n1, &px1);
                let book2 = draw(cfg.m2, n2, &px2);
                DataStage::Random(TimeSharing {
                    n1,
                    n2,
                    hold1,
                    hold2,
                    book1,
                    book2,
                })
            }
        };
        Ok(Self {
            cfg,
            code,
            tester,
            data,
        })
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.cfg
    }

    pub fn code(&self) -> &ConfirmationCode {
        &self.code
    }

    pub fn tester(&self) -> &ConfirmationTester {
        &self.tester
    }

    /// Exact per-block retransmission probability in genie mode.
    pub fn genie_q_exact(&self) -> Result<f64, SimError> {
        match self.data {
            DataStage::Genie { zeta, weights } => {
                let s = exact_confirmation_stats(&self.tester)?;
                let zeta = if weights.iter().sum::<f64>() > 0.0 { zeta } else { 0.0 };
                Ok(s.retransmit_probability(zeta, weights))
            }
            DataStage::Random(_) => Err(SimError::InvalidConfig("exact q needs the genie data stage".into())),
        }
    }

    /// Codebooks of the time-sharing data stage: `(book1, book2, hold1, hold2, n1, n2)`.
    pub(crate) fn time_sharing(&self) -> Option<(&[Vec<usize>], &[Vec<usize>], usize, usize, usize, usize)> {
        match &self.data {
            DataStage::Random(t) => Some((&t.book1, &t.book2, t.hold1, t.hold2, t.n1, t.n2)),
            DataStage::Genie { .. } => None,
        }
    }

    /// One data-stage pass; returns `(H1, H2)`.
    fn data_stage<R: Rng + ?Sized>(&self, w: (u64, u64), rng: &mut R) -> Pattern {
        match &self.data {
            DataStage::Genie { zeta, weights } => {
                let total: f64 = weights.iter().sum();
                if total > 0.0 && rng.gen::<f64>() < *zeta {
                    Pattern::ALTERNATIVES[pick_categorical(weights, rng.gen())]
                } else {
                    Pattern::P00
                }
            }
            DataStage::Random(t) => {
                let ch = &self.cfg.channel;
                let w1 = decode_share(ch, &t.book1, w.0 as usize, |x| (x, t.hold2), rng);
                let w2 = decode_share(ch, &t.book2, w.1 as usize, |x| (t.hold1, x), rng);
                Pattern::from_bits(w1 != w.0 as usize, w2 != w.1 as usize)
            }
        }
    }
}

/// Sends codeword `msg` through the channel and ML-decodes it (ties to the lowest index).
fn decode_share<R: Rng + ?Sized>(
    ch: &Channel,
    book: &[Vec<usize>],
    msg: usize,
    inputs: impl Fn(usize) -> (usize, usize),
    rng: &mut R,
) -> usize {
    if book.len() <= 1 {
        return 0;
    }
    let ys: Vec<usize> = book[msg]
        .iter()
        .map(|&x| {
            let (a, b) = inputs(x);
            pick_categorical(ch.row(a, b), rng.gen())
        })
        .collect();
    let mut best = (0, f64::NEG_INFINITY);
    for (m, cw) in book.iter().enumerate() {
        let mut ll = 0.0;
        for (&x, &y) in cw.iter().zip(&ys) {
            let (a, b) = inputs(x);
            let q = ch.q(y, a, b);
            if q <= 1e-300 {
                ll = f64::NEG_INFINITY;
                break;
            }
            ll += q.log2();
        }
        if ll > best.1 {
            best = (m, ll);
        }
    }
    best.0
}

/// Runs blocks until the receiver accepts or `max_blocks` is reached.
pub fn run_protocol<R: Rng + ?Sized>(scheme: &Scheme, rng: &mut R) -> TrialRecord {
    let cfg = &scheme.cfg;
    let w = (rng.gen_range(0..cfg.m1), rng.gen_range(0..cfg.m2));
    let mut rec = TrialRecord {
        total_uses: 0,
        blocks: 0,
        outcome: Outcome::Aborted,
        h12_history: Vec::new(),
        theta_decisions: Vec::new(),
    };
    let mut block = Vec::with_capacity(scheme.tester.len());
    while (rec.blocks as usize) < cfg.max_blocks {
        let h = scheme.data_stage(w, rng);
        sample_block(&scheme.tester, h, rng, &mut block);
        let d = scheme.tester.test(&block).expect("block has code length");
        rec.blocks += 1;
        rec.total_uses += cfg.n as u64;
        rec.h12_history.push(h);
        rec.theta_decisions.push(d.accept);
        if d.accept {
            rec.outcome = if h == Pattern::P00 {
                Outcome::Correct
            } else {
                Outcome::UndetectedError
            };
            break;
        }
    }
    rec
}

/// Per-trial generator: `ChaCha8(seed)` on stream `trial`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(trial);
    r
}
