//! Exact acceptance probabilities of the confirmation test, by enumeration.

use rand::Rng;

use crate::sim::confirmation::{ConfirmationTester, Pattern};
use crate::sim::SimError;

/// Largest number of output sequences (or type classes) enumerated.
pub const EXACT_BUDGET: f64 = 1e7;

/// `accept[a] = P(accept | pattern a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfirmationStats {
    pub accept: [f64; 4],
}

impl ConfirmationStats {
    /// `P(accept | a)` for an alternative: an undetected error.
    pub fn miss(&self, a: Pattern) -> f64 {
        self.accept[a.index()]
    }

    /// `P(reject | 00)`: a retransmission of a correct decision.
    pub fn false_alarm(&self) -> f64 {
        1.0 - self.accept[0]
    }

    pub fn max_miss(&self) -> f64 {
        self.accept[1..].iter().copied().fold(0.0, f64::max)
    }

    /// Retransmission probability per block when the data stage errs with
    /// probability `zeta`, splitting errors over the alternatives by `weights`.
    pub fn retransmit_probability(&self, zeta: f64, weights: [f64; 3]) -> f64 {
        let wrong: f64 = Pattern::ALTERNATIVES
            .iter()
            .zip(weights)
            .map(|(a, w)| w * (1.0 - self.accept[a.index()]))
            .sum();
        (1.0 - zeta) * self.false_alarm() + zeta * wrong
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactMethod {
    /// Every output sequence in `Y^len`.
    Sequences,
    /// Output type classes per distinct code column (multinomial weights).
    TypeClasses,
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Enumeration sizes for both methods.
pub fn enumeration_sizes(tester: &ConfirmationTester) -> (f64, f64) {
    let ny = tester.ny();
    let seqs = (ny as f64).powi(tester.len() as i32);
    let classes = tester
        .kind_counts()
        .iter()
        .map(|&c| binom(c + ny - 1, ny - 1))
        .product();
    (seqs, classes)
}

/// Exact statistics with the cheaper of the two enumerations.
pub fn exact_confirmation_stats(tester: &ConfirmationTester) -> Result<ConfirmationStats, SimError> {
    let (seqs, classes) = enumeration_sizes(tester);
    let method = if seqs <= classes {
        ExactMethod::Sequences
    } else {
        ExactMethod::TypeClasses
    };
    exact_confirmation_stats_with(tester, method)
}

pub fn exact_confirmation_stats_with(
    tester: &ConfirmationTester,
    method: ExactMethod,
) -> Result<ConfirmationStats, SimError> {
    let (seqs, classes) = enumeration_sizes(tester);
    let size = match method {
        ExactMethod::Sequences => seqs,
        ExactMethod::TypeClasses => classes,
    };
    if size > EXACT_BUDGET {
        return Err(SimError::TooLarge {
            size,
            budget: EXACT_BUDGET,
        });
    }
    let mut accept = [0.0; 4];
    match method {
        ExactMethod::Sequences => by_sequences(tester, 0, [0.0; 4], &mut accept),
        ExactMethod::TypeClasses => {
            let lnfact = ln_factorials(tester.len());
            by_classes(tester, &lnfact, 0, 0.0, [0.0; 4], &mut accept)
        }
    }
    Ok(ConfirmationStats {
        accept: accept.map(|v| v.min(1.0)),
    })
}

fn credit(tester: &ConfirmationTester, ll: &[f64; 4], log_coef: f64, accept: &mut [f64; 4]) {
    if tester.decide(ll).accept {
        for a in 0..4 {
            if ll[a].is_finite() {
                accept[a] += (log_coef + ll[a]).exp2();
            }
        }
    }
}

fn by_sequences(tester: &ConfirmationTester, pos: usize, ll: [f64; 4], accept: &mut [f64; 4]) {
    if pos == tester.len() {
        credit(tester, &ll, 0.0, accept);
        return;
    }
    let k = tester.kinds()[pos];
    for y in 0..tester.ny() {
        let mut next = ll;
        let mut possible = false;
        for a in Pattern::ALL {
            next[a.index()] += tester.log_q(k, a, y);
            possible |= next[a.index()].is_finite();
        }
        if possible {
            by_sequences(tester, pos + 1, next, accept);
        }
    }
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n + 1];
    for k in 1..=n {
        v[k] = v[k - 1] + (k as f64).ln();
    }
    v
}

fn compositions(total: usize, parts: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(left: usize, parts: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() + 1 == parts {
            cur.push(left);
            f(cur);
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(left - c, parts, cur, f);
            cur.pop();
        }
    }
    rec(total, parts, &mut Vec::with_capacity(parts), f);
}

fn by_classes(
    tester: &ConfirmationTester,
    lnfact: &[f64],
    kind: usize,
    log_coef: f64,
    ll: [f64; 4],
    accept: &mut [f64; 4],
) {
    let counts = tester.kind_counts();
    if kind == counts.len() {
        credit(tester, &ll, log_coef, accept);
        return;
    }
    let n = counts[kind];
    compositions(n, tester.ny(), &mut |c: &[usize]| {
        let mut coef = lnfact[n];
        let mut next = ll;
        for (y, &cy) in c.iter().enumerate() {
            if cy == 0 {
                continue;
            }
            coef -= lnfact[cy];
            for a in Pattern::ALL {
                next[a.index()] += cy as f64 * tester.log_q(kind, a, y);
            }
        }
        if next.iter().any(|v| v.is_finite()) {
            by_classes(
                tester,
                lnfact,
                kind + 1,
                log_coef + coef / std::f64::consts::LN_2,
                next,
                accept,
            );
        }
    });
}

/// Draws the received block for a pattern.
pub(crate) fn sample_block<R: Rng + ?Sized>(
    tester: &ConfirmationTester,
    a: Pattern,
    rng: &mut R,
    out: &mut Vec<usize>,
) {
    out.clear();
    for &k in tester.kinds() {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut pick = tester.ny() - 1;
        for y in 0..tester.ny() {
            acc += tester.log_q(k, a, y).exp2();
            if u < acc {
                pick = y;
                break;
            }
        }
        // Never return an impossible letter from rounding at the top end.
        while !tester.log_q(k, a, pick).is_finite() && pick > 0 {
            pick -= 1;
        }
        out.push(pick);
    }
}

/// Monte Carlo acceptance frequencies, `samples` blocks per pattern.
pub fn monte_carlo_confirmation_stats<R: Rng + ?Sized>(
    tester: &ConfirmationTester,
    samples: usize,
    rng: &mut R,
) -> ConfirmationStats {
    let mut accept = [0.0; 4];
    let mut block = Vec::with_capacity(tester.len());
    for a in Pattern::ALL {
        let mut hits = 0usize;
        for _ in 0..samples {
            sample_block(tester, a, rng, &mut block);
            if tester.test(&block).expect("sampled block has code length").accept {
                hits += 1;
            }
        }
        accept[a.index()] = hits as f64 / samples as f64;
    }
    ConfirmationStats { accept }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::Quad;
    use crate::sim::confirmation::{ConfirmationCode, TestRule};
    use crate::Channel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tester(cols: Vec<Quad>, rule: TestRule) -> ConfirmationTester {
        let ch = Channel::additive_mod_m(3, 0.1).unwrap();
        let code = ConfirmationCode::from_columns(&ch, cols).unwrap();
        ConfirmationTester::new(&ch, &code, rule).unwrap()
    }

    #[test]
    fn hand_enumeration_len_one() {
        let t = tester(vec![Quad::new(0, 0, 1, 1)], TestRule::Ml);
        let s = exact_confirmation_stats(&t).unwrap();
        assert!((s.miss(Pattern::P11) - 0.1).abs() < 1e-15);
        assert!((s.false_alarm() - 0.2).abs() < 1e-15);
        assert!((s.miss(Pattern::P01) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn repeated_column_composes() {
        // ML on two repeats: accept iff 00 is the unique best; compare with a
        // direct sum over the 9 outputs.
        let t = tester(vec![Quad::new(0, 0, 1, 1); 2], TestRule::Ml);
        let s = exact_confirmation_stats_with(&t, ExactMethod::Sequences).unwrap();
        let c = exact_confirmation_stats_with(&t, ExactMethod::TypeClasses).unwrap();
        let ch = Channel::additive_mod_m(3, 0.1).unwrap();
        let mut want = [0.0; 4];
        for y0 in 0..3 {
            for y1 in 0..3 {
                let ll = t.log_likelihoods(&[y0, y1]).unwrap();
                if t.decide(&ll).accept {
                    for a in Pattern::ALL {
                        let (x1, x2) = a.inputs(Quad::new(0, 0, 1, 1));
                        want[a.index()] += ch.q(y0, x1, x2) * ch.q(y1, x1, x2);
                    }
                }
            }
        }
        for a in 0..4 {
            assert!((s.accept[a] - want[a]).abs() < 1e-14);
            assert!((c.accept[a] - want[a]).abs() < 1e-14);
        }
    }

    #[test]
    fn methods_agree_on_mixed_code() {
        let cols = vec![
            Quad::new(0, 0, 1, 1),
            Quad::new(1, 2, 0, 0),
            Quad::new(0, 0, 1, 1),
            Quad::new(2, 1, 0, 2),
            Quad::new(1, 2, 0, 0),
            Quad::new(0, 0, 1, 1),
        ];
        for rule in [TestRule::Ml, TestRule::threshold(), TestRule::Margin { delta_t: 0.3 }] {
            let t = tester(cols.clone(), rule);
            let s = exact_confirmation_stats_with(&t, ExactMethod::Sequences).unwrap();
            let c = exact_confirmation_stats_with(&t, ExactMethod::TypeClasses).unwrap();
            for a in 0..4 {
                assert!((s.accept[a] - c.accept[a]).abs() < 1e-13, "{rule:?}");
            }
        }
    }

    #[test]
    fn monte_carlo_matches_exact() {
        let t = tester(vec![Quad::new(0, 0, 1, 1)], TestRule::Ml);
        let e = exact_confirmation_stats(&t).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = monte_carlo_confirmation_stats(&t, 20_000, &mut rng);
        for a in 0..4 {
            let p = e.accept[a];
            let se = (p * (1.0 - p) / 20_000.0).sqrt();
            assert!((m.accept[a] - p).abs() <= 4.0 * se + 1e-12);
        }
    }

    #[test]
    fn budget() {
        let t = tester(
            (0..20).map(|i| Quad::new(i % 3, (i / 3) % 3, 1, 1)).collect(),
            TestRule::Ml,
        );
        assert!(matches!(exact_confirmation_stats(&t), Err(SimError::TooLarge { .. })));
    }
}
