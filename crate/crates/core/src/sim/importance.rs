//! Importance-sampled acceptance probabilities for long confirmation blocks.

use rand::Rng;

use crate::sim::confirmation::{ConfirmationTester, Pattern};
use crate::sim::SimError;

/// Estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsEstimate {
    pub estimate: f64,
    pub std_err: f64,
    pub samples: usize,
}

impl IsEstimate {
    pub fn relative_error(&self) -> f64 {
        if self.estimate > 0.0 {
            self.std_err / self.estimate
        } else {
            f64::INFINITY
        }
    }
}

/// Tilted sampling law per column kind: cumulative probabilities and
/// `log2(P_a / g)` per letter.
struct Tilt {
    cdf: Vec<Vec<f64>>,
    log_w: Vec<Vec<f64>>,
}

fn tilt(tester: &ConfirmationTester, a: Pattern, s: f64) -> Result<Tilt, SimError> {
    let n_kinds = tester.kind_counts().len();
    let ny = tester.ny();
    let mut cdf = Vec::with_capacity(n_kinds);
    let mut log_w = Vec::with_capacity(n_kinds);
    for k in 0..n_kinds {
        let pa: Vec<f64> = (0..ny).map(|y| tester.log_q(k, a, y).exp2()).collect();
        let p0: Vec<f64> = (0..ny).map(|y| tester.log_q(k, Pattern::P00, y).exp2()).collect();
        let mut g: Vec<f64> = pa.iter().zip(&p0).map(|(x, z)| x.powf(1.0 - s) * z.powf(s)).collect();
        let mut z: f64 = g.iter().sum();
        if !(z > 0.0) {
            // Disjoint supports: nothing to tilt toward; sample the true law here.
            g = pa.clone();
            z = g.iter().sum();
        }
        if !(z > 0.0) {
            return Err(SimError::DegenerateTilt);
        }
        g.iter_mut().for_each(|v| *v /= z);
        let mut acc = 0.0;
        cdf.push(
            g.iter()
                .map(|v| {
                    acc += v;
                    acc
                })
                .collect(),
        );
        log_w.push(
            pa.iter()
                .zip(&g)
                .map(|(&p, &q)| if q > 0.0 { p.log2() - q.log2() } else { f64::NEG_INFINITY })
                .collect(),
        );
    }
    Ok(Tilt { cdf, log_w })
}

/// Estimates `P(accept | a)` by sampling each position from
/// `g ∝ P_a^{1-s} P_00^s` and weighting by `P_a / g`. `s = 0` is plain Monte Carlo.
pub fn importance_sampled_miss<R: Rng + ?Sized>(
    tester: &ConfirmationTester,
    target: Pattern,
    n_samples: usize,
    s: f64,
    rng: &mut R,
) -> Result<IsEstimate, SimError> {
    if !(0.0..=1.0).contains(&s) {
        return Err(SimError::InvalidConfig(format!("tilt parameter {s} outside [0, 1]")));
    }
    if n_samples == 0 {
        return Err(SimError::InvalidConfig("need at least one sample".into()));
    }
    let t = tilt(tester, target, s)?;
    let mut block = Vec::with_capacity(tester.len());
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n_samples {
        block.clear();
        let mut log_w = 0.0;
        for &k in tester.kinds() {
            let u: f64 = rng.gen();
            let cdf = &t.cdf[k];
            let mut y = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
            while t.log_w[k][y] == f64::NEG_INFINITY && y > 0 {
                y -= 1;
            }
            log_w += t.log_w[k][y];
            block.push(y);
        }
        if tester.test(&block)?.accept {
            let w = log_w.exp2();
            sum += w;
            sum_sq += w * w;
        }
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = if n_samples > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(IsEstimate {
        estimate: mean,
        std_err: (var / n).sqrt(),
        samples: n_samples,
    })
}
