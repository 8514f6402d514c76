//! Normalized directed informations for short blocks, by full enumeration.

use std::collections::HashMap;

use crate::bounds::BoundsError;
use crate::scalar::entropy_bits;
use crate::Channel;

/// Upper limit on `(|X1| |X2| |Y|)^L`.
pub const DIRECTED_INFO_BUDGET: f64 = 4e6;

/// Encoder law at time `l` given the encoder's own past inputs and the fed-back outputs.
pub trait CausalPolicy: Sync {
    /// Distribution over the encoder's alphabet; `own_past.len() == outputs.len() == l`.
    fn law(&self, own_past: &[usize], outputs: &[usize]) -> Vec<f64>;
}

/// The same input law at every time, ignoring the past.
#[derive(Debug, Clone, PartialEq)]
pub struct MemorylessPolicy(pub Vec<f64>);

impl CausalPolicy for MemorylessPolicy {
    fn law(&self, _: &[usize], _: &[usize]) -> Vec<f64> {
        self.0.clone()
    }
}

/// Always sends one letter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantPolicy {
    pub letter: usize,
    pub alphabet: usize,
}

impl CausalPolicy for ConstantPolicy {
    fn law(&self, _: &[usize], _: &[usize]) -> Vec<f64> {
        let mut v = vec![0.0; self.alphabet];
        v[self.letter] = 1.0;
        v
    }
}

impl<F> CausalPolicy for F
where
    F: Fn(&[usize], &[usize]) -> Vec<f64> + Sync,
{
    fn law(&self, own_past: &[usize], outputs: &[usize]) -> Vec<f64> {
        self(own_past, outputs)
    }
}

/// `(I(X1 -> Y || X2), I(X2 -> Y || X1), I(X1 X2 -> Y)) / L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectedInfoTriple {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
}

struct Seq {
    x1: Vec<usize>,
    x2: Vec<usize>,
    y: Vec<usize>,
    p: f64,
}

fn marginal_entropy<K, F>(seqs: &[Seq], key: F) -> f64
where
    K: std::hash::Hash + Eq,
    F: Fn(&Seq) -> K,
{
    let mut m: HashMap<K, f64> = HashMap::new();
    for s in seqs {
        *m.entry(key(s)).or_insert(0.0) += s.p;
    }
    let v: Vec<f64> = m.into_values().collect();
    entropy_bits(&v)
}

/// Exact values from the joint law of `(X1^L, X2^L, Y^L)`.
///
/// With a memoryless channel each term reduces to a difference of conditional
/// output entropies, e.g. `I1 = sum_l H(Y_l | Y^{l-1}, X2^l) - H(Y_l | X1_l, X2_l)`.
pub fn directed_info(
    ch: &Channel,
    policy1: &dyn CausalPolicy,
    policy2: &dyn CausalPolicy,
    len: usize,
) -> Result<DirectedInfoTriple, BoundsError> {
    if len == 0 {
        return Err(BoundsError::DimensionMismatch("block length must be at least 1".into()));
    }
    let size = ((ch.nx1() * ch.nx2() * ch.ny()) as f64).powi(len as i32);
    if size > DIRECTED_INFO_BUDGET {
        return Err(BoundsError::TooLarge {
            size,
            budget: DIRECTED_INFO_BUDGET,
        });
    }

    let mut seqs = vec![Seq {
        x1: vec![],
        x2: vec![],
        y: vec![],
        p: 1.0,
    }];
    let mut noise = 0.0;
    let (mut i1, mut i2, mut i3) = (0.0, 0.0, 0.0);
    for _ in 0..len {
        let mut next = Vec::with_capacity(seqs.len() * ch.nx1() * ch.nx2() * ch.ny());
        for s in &seqs {
            let p1 = policy1.law(&s.x1, &s.y);
            let p2 = policy2.law(&s.x2, &s.y);
            if p1.len() != ch.nx1() || p2.len() != ch.nx2() {
                return Err(BoundsError::DimensionMismatch("policy law has the wrong alphabet size".into()));
            }
            for (a, &pa) in p1.iter().enumerate() {
                for (b, &pb) in p2.iter().enumerate() {
                    let w = s.p * pa * pb;
                    if w <= 0.0 {
                        continue;
                    }
                    let row = ch.row(a, b);
                    noise += w * entropy_bits(row);
                    for (y, &q) in row.iter().enumerate() {
                        if q <= 0.0 {
                            continue;
                        }
                        let mut n = Seq {
                            x1: s.x1.clone(),
                            x2: s.x2.clone(),
                            y: s.y.clone(),
                            p: w * q,
                        };
                        n.x1.push(a);
                        n.x2.push(b);
                        n.y.push(y);
                        next.push(n);
                    }
                }
            }
        }
        seqs = next;
        let t = seqs[0].y.len();
        let prev_y = |s: &Seq| s.y[..t - 1].to_vec();
        // H(Y_l | Y^{l-1}, X2^l) = H(Y^l, X2^l) - H(Y^{l-1}, X2^l), etc.
        let h_y = marginal_entropy(&seqs, |s| s.y.clone()) - marginal_entropy(&seqs, prev_y);
        let h_y_x2 = marginal_entropy(&seqs, |s| (s.y.clone(), s.x2.clone()))
            - marginal_entropy(&seqs, |s| (prev_y(s), s.x2.clone()));
        let h_y_x1 = marginal_entropy(&seqs, |s| (s.y.clone(), s.x1.clone()))
            - marginal_entropy(&seqs, |s| (prev_y(s), s.x1.clone()));
        i1 += h_y_x2;
        i2 += h_y_x1;
        i3 += h_y;
    }
    let l = len as f64;
    Ok(DirectedInfoTriple {
        i1: ((i1 - noise) / l).max(0.0),
        i2: ((i2 - noise) / l).max(0.0),
        i3: ((i3 - noise) / l).max(0.0),
    })
}
