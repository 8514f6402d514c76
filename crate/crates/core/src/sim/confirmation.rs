//! Confirmation stage: four equal-type codewords and the receiver's acceptance test.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::info::{kl_rows, Quad, QuadDistribution};
use crate::sim::SimError;
use crate::Channel;

/// Which codeword each user sends: `(H1, H2)`, where `H_i = 1` flags a wrong tentative decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pattern {
    P00,
    P01,
    P10,
    P11,
}

impl Pattern {
    pub const ALL: [Pattern; 4] = [Pattern::P00, Pattern::P01, Pattern::P10, Pattern::P11];
    /// Patterns that must not be accepted.
    pub const ALTERNATIVES: [Pattern; 3] = [Pattern::P01, Pattern::P10, Pattern::P11];

    pub fn from_bits(h1: bool, h2: bool) -> Self {
        match (h1, h2) {
            (false, false) => Pattern::P00,
            (false, true) => Pattern::P01,
            (true, false) => Pattern::P10,
            (true, true) => Pattern::P11,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        let i = self.index();
        (i & 2 != 0, i & 1 != 0)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// The input pair sent at a column when this pattern is active.
    #[inline]
    pub fn inputs(self, q: Quad) -> (usize, usize) {
        let (h1, h2) = self.bits();
        (if h1 { q.z1 } else { q.x1 }, if h2 { q.z2 } else { q.x2 })
    }

    pub fn label(self) -> &'static str {
        ["00", "01", "10", "11"][self.index()]
    }
}

impl std::fmt::Display for Pattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Codewords `x1(0), x2(0), x1(1), x2(1)` stored column-wise: column `k` is the
/// quadruple `(x1(0)_k, x2(0)_k, x1(1)_k, x2(1)_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfirmationCode {
    nx1: usize,
    nx2: usize,
    columns: Vec<Quad>,
}

impl ConfirmationCode {
    pub fn from_columns(ch: &Channel, columns: Vec<Quad>) -> Result<Self, SimError> {
        if columns.is_empty() {
            return Err(SimError::InvalidConfig("confirmation code needs at least one column".into()));
        }
        if columns
            .iter()
            .any(|q| q.x1 >= ch.nx1() || q.z1 >= ch.nx1() || q.x2 >= ch.nx2() || q.z2 >= ch.nx2())
        {
            return Err(SimError::InvalidConfig("confirmation column letter out of range".into()));
        }
        Ok(Self {
            nx1: ch.nx1(),
            nx2: ch.nx2(),
            columns,
        })
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn columns(&self) -> &[Quad] {
        &self.columns
    }

    /// Codeword of user 1 (`which = 0` or `1`).
    pub fn codeword1(&self, which: usize) -> Vec<usize> {
        self.columns
            .iter()
            .map(|q| if which == 0 { q.x1 } else { q.z1 })
            .collect()
    }

    pub fn codeword2(&self, which: usize) -> Vec<usize> {
        self.columns
            .iter()
            .map(|q| if which == 0 { q.x2 } else { q.z2 })
            .collect()
    }

    /// Column counts per quadruple index.
    pub fn counts(&self) -> Vec<usize> {
        let np = self.nx1 * self.nx2;
        let mut c = vec![0; np * np];
        for q in &self.columns {
            c[(q.x1 * self.nx2 + q.x2) * np + q.z1 * self.nx2 + q.z2] += 1;
        }
        c
    }

    /// Empirical joint type of the columns.
    pub fn realized_type(&self, ch: &Channel) -> QuadDistribution<f64> {
        let n = self.len() as f64;
        let w = self.counts().into_iter().map(|c| c as f64 / n).collect();
        QuadDistribution::new(ch, w).expect("counts form a distribution")
    }
}

/// Integer counts summing to `len` with `|count - len w| < 1`
/// (largest remainders first; ties go to the lower index).
pub fn quantize_type(weights: &[f64], len: usize) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let scaled: Vec<f64> = weights.iter().map(|w| w / total * len as f64).collect();
    let mut counts: Vec<usize> = scaled.iter().map(|s| s.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (scaled[a] - scaled[a].floor(), scaled[b] - scaled[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(len.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Lays out `len` columns with the quantized type of `quad_dist`, then
/// permutes column positions uniformly at random.
pub fn build_confirmation_code<R: Rng + ?Sized>(
    ch: &Channel,
    quad_dist: &QuadDistribution<f64>,
    len: usize,
    rng: &mut R,
) -> Result<ConfirmationCode, SimError> {
    if len == 0 {
        return Err(SimError::InvalidConfig("confirmation length must be at least 1".into()));
    }
    if quad_dist.dims() != (ch.nx1(), ch.nx2()) {
        return Err(SimError::InvalidConfig("quadruple law does not match the channel".into()));
    }
    let counts = quantize_type(quad_dist.weights(), len);
    let mut columns = Vec::with_capacity(len);
    for (idx, &c) in counts.iter().enumerate() {
        columns.extend(std::iter::repeat_n(Quad::from_index(ch, idx), c));
    }
    columns.shuffle(rng);
    ConfirmationCode::from_columns(ch, columns)
}

/// `E_P[D(Q(.|pattern `from`) || Q(.|pattern `to`))]` under a quadruple law.
pub fn dbar(ch: &Channel, ty: &QuadDistribution<f64>, from: Pattern, to: Pattern) -> f64 {
    let mut acc = 0.0;
    for (q, w) in ty.support(ch) {
        let (a, b) = (from.inputs(q), to.inputs(q));
        acc += w * kl_rows(ch.row(a.0, a.1), ch.row(b.0, b.1));
    }
    acc
}

/// Receiver's decision rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestRule {
    /// Accept iff pattern 00 is the unique maximum-likelihood pattern.
    Ml,
    /// Accept iff, for every alternative `a`, the log-likelihood ratio of 00
    /// over `a` is positive and at least `max(Dbar(00||a) - delta_t, 0) * len`,
    /// with `Dbar` taken under the code's realized type.
    Threshold { delta_t: f64 },
    /// Accept iff 00 beats every alternative by a fixed `delta_t * len` bits.
    Margin { delta_t: f64 },
}

impl TestRule {
    pub const DEFAULT_DELTA_T: f64 = 0.05;

    pub fn threshold() -> Self {
        TestRule::Threshold {
            delta_t: Self::DEFAULT_DELTA_T,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TestRule::Ml => "ml",
            TestRule::Threshold { .. } => "threshold",
            TestRule::Margin { .. } => "margin",
        }
    }

    pub fn delta_t(&self) -> Option<f64> {
        match *self {
            TestRule::Ml => None,
            TestRule::Threshold { delta_t } | TestRule::Margin { delta_t } => Some(delta_t),
        }
    }
}

/// Receiver's estimate `(H1^, H2^)`; `accept` is the hypothesis that the
/// tentative decision is correct.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    pub estimate: Pattern,
    pub accept: bool,
}

/// Precomputed log-likelihood tables for a code, channel and rule.
#[derive(Debug, Clone)]
pub struct ConfirmationTester {
    len: usize,
    rule: TestRule,
    /// `log2 Q(y | inputs of pattern a)` per distinct column: `[kind][a][y]`.
    tables: Vec<[Vec<f64>; 4]>,
    kinds: Vec<usize>,
    kind_counts: Vec<usize>,
    /// Required LLR (bits) of 00 over each alternative.
    required: [f64; 3],
    ny: usize,
}

/// Log-likelihood differences within this many bits count as ties, so that
/// decisions do not depend on summation order.
pub const LLR_TIE_TOL: f64 = 1e-9;

fn log2_floor(q: f64) -> f64 {
    if q <= 1e-300 {
        f64::NEG_INFINITY
    } else {
        q.log2()
    }
}

impl ConfirmationTester {
    pub fn new(ch: &Channel, code: &ConfirmationCode, rule: TestRule) -> Result<Self, SimError> {
        if ch.nx1() != code.nx1 || ch.nx2() != code.nx2 {
            return Err(SimError::InvalidConfig("code alphabet does not match the channel".into()));
        }
        if let Some(d) = rule.delta_t() {
            if !(d >= 0.0) || !d.is_finite() {
                return Err(SimError::InvalidConfig(format!("delta_t must be finite and >= 0, got {d}")));
            }
        }
        let mut distinct: Vec<Quad> = Vec::new();
        let mut kinds = Vec::with_capacity(code.len());
        for q in &code.columns {
            let k = match distinct.iter().position(|d| d == q) {
                Some(k) => k,
                None => {
                    distinct.push(*q);
                    distinct.len() - 1
                }
            };
            kinds.push(k);
        }
        let mut kind_counts = vec![0; distinct.len()];
        for &k in &kinds {
            kind_counts[k] += 1;
        }
        let tables = distinct
            .iter()
            .map(|&q| {
                Pattern::ALL.map(|a| {
                    let (x1, x2) = a.inputs(q);
                    ch.row(x1, x2).iter().map(|&v| log2_floor(v)).collect()
                })
            })
            .collect();
        let len = code.len();
        let ty = code.realized_type(ch);
        let required = match rule {
            TestRule::Ml => [0.0; 3],
            TestRule::Threshold { delta_t } => Pattern::ALTERNATIVES.map(|a| {
                let d = dbar(ch, &ty, Pattern::P00, a);
                if d.is_infinite() {
                    f64::INFINITY
                } else {
                    (d - delta_t).max(0.0) * len as f64
                }
            }),
            TestRule::Margin { delta_t } => [delta_t * len as f64; 3],
        };
        Ok(Self {
            len,
            rule,
            tables,
            kinds,
            kind_counts,
            required,
            ny: ch.ny(),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn rule(&self) -> TestRule {
        self.rule
    }

    pub(crate) fn kinds(&self) -> &[usize] {
        &self.kinds
    }

    pub(crate) fn kind_counts(&self) -> &[usize] {
        &self.kind_counts
    }

    /// `log2 Q(y | pattern a)` at a column kind.
    #[inline]
    pub(crate) fn log_q(&self, kind: usize, a: Pattern, y: usize) -> f64 {
        self.tables[kind][a.index()][y]
    }

    /// Required LLR of 00 over each alternative, in bits.
    pub fn required_llr(&self) -> [f64; 3] {
        self.required
    }

    /// Log-likelihoods of the four patterns for a received block.
    pub fn log_likelihoods(&self, received: &[usize]) -> Result<[f64; 4], SimError> {
        if received.len() != self.len {
            return Err(SimError::LengthMismatch {
                expected: self.len,
                got: received.len(),
            });
        }
        let mut ll = [0.0; 4];
        for (&k, &y) in self.kinds.iter().zip(received) {
            let t = &self.tables[k];
            for a in 0..4 {
                ll[a] += t[a][y];
            }
        }
        Ok(ll)
    }

    /// Applies the rule to pattern log-likelihoods.
    pub fn decide(&self, ll: &[f64; 4]) -> Decision {
        let accept = match self.rule {
            TestRule::Ml => ll[1..].iter().all(|&v| ll[0] - v > LLR_TIE_TOL),
            TestRule::Threshold { .. } | TestRule::Margin { .. } => (0..3).all(|i| {
                let llr = ll[0] - ll[i + 1];
                // NaN (both impossible) fails both comparisons.
                llr > LLR_TIE_TOL && llr >= self.required[i] - LLR_TIE_TOL
            }),
        };
        let estimate = if accept {
            Pattern::P00
        } else {
            let mut best = 1;
            for a in 2..4 {
                if ll[a] > ll[best] + LLR_TIE_TOL {
                    best = a;
                }
            }
            Pattern::ALL[best]
        };
        Decision { estimate, accept }
    }

    pub fn test(&self, received: &[usize]) -> Result<Decision, SimError> {
        Ok(self.decide(&self.log_likelihoods(received)?))
    }
}

/// One-shot form of [`ConfirmationTester::test`].
pub fn confirmation_test(
    rule: TestRule,
    received: &[usize],
    code: &ConfirmationCode,
    ch: &Channel,
) -> Result<Decision, SimError> {
    ConfirmationTester::new(ch, code, rule)?.test(received)
}
