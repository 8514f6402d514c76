//! Weighted-sum capacity `C_lambda` as a function of the weights.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::bounds::lambda::{lattice, lattice_len, LambdaWeights};
use crate::bounds::BoundsError;
use crate::channel::PtpChannel;
use crate::info::{mutual_infos, weighted_info_gradient, InputProduct, MutualInfos};
use crate::scalar::entropy_bits;
use crate::Channel;

/// Default lattice resolution (points per simplex edge) for cached samples.
pub const DEFAULT_GRID_RESOLUTION: usize = 200;
/// Surrogate evaluations are an inner optimization each; sample more sparsely.
pub const SURROGATE_GRID_RESOLUTION: usize = 40;

/// How a surface's values were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Exact value for a channel family with a known region.
    ExactClosedForm,
    /// Best product input law at block length one: an inner estimate.
    SingleLetterSurrogate,
    /// Values supplied for a fixed block length `L`.
    FixedL(usize),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::ExactClosedForm => write!(f, "exact-closed-form"),
            Provenance::SingleLetterSurrogate => write!(f, "single-letter-surrogate"),
            Provenance::FixedL(l) => write!(f, "fixed-L{l}"),
        }
    }
}

type Evaluator = dyn Fn(&LambdaWeights) -> f64 + Send + Sync;

/// `lambda -> C_lambda` with a lazily filled, write-once lattice cache.
#[derive(Clone)]
pub struct CapacitySurface {
    provenance: Provenance,
    eval: Arc<Evaluator>,
    resolution: usize,
    grid: Arc<OnceLock<Vec<f64>>>,
}

impl fmt::Debug for CapacitySurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CapacitySurface")
            .field("provenance", &self.provenance)
            .field("resolution", &self.resolution)
            .field("cached", &self.grid.get().is_some())
            .finish()
    }
}

impl CapacitySurface {
    pub fn from_fn<F>(provenance: Provenance, f: F) -> Self
    where
        F: Fn(&LambdaWeights) -> f64 + Send + Sync + 'static,
    {
        Self {
            provenance,
            eval: Arc::new(f),
            resolution: DEFAULT_GRID_RESOLUTION,
            grid: Arc::new(OnceLock::new()),
        }
    }

    /// Uses a different lattice resolution for the cached samples.
    pub fn with_resolution(mut self, resolution: usize) -> Self {
        assert!(resolution >= 1);
        self.resolution = resolution;
        self.grid = Arc::new(OnceLock::new());
        self
    }

    /// Additive mod-`m` MAC: `C_lambda = log2 m - H(noise)` for every weight.
    pub fn additive(m: usize, p: f64) -> Result<Self, BoundsError> {
        // Validates (m, p).
        Channel::additive_mod_m(m, p)?;
        let c = additive_capacity(m, p);
        Ok(Self::from_fn(Provenance::ExactClosedForm, move |_| c))
    }

    /// Two parallel channels with capacities `c1`, `c2`:
    /// `C_lambda = l1 c1 + l2 c2 + l3 (c1 + c2)`.
    pub fn product(c1: f64, c2: f64) -> Self {
        Self::from_fn(Provenance::ExactClosedForm, move |l| {
            l.l1() * c1 + l.l2() * c2 + l.l3() * (c1 + c2)
        })
    }

    /// Product surface from the two component kernels.
    pub fn product_of(q1: &PtpChannel<f64>, q2: &PtpChannel<f64>) -> Self {
        Self::product(q1.capacity().0, q2.capacity().0)
    }

    /// A MAC where one user has a single letter reduces to a point-to-point
    /// channel of capacity `C`: `C_lambda = (l_active + l3) C`.
    pub fn degenerate(ch: &Channel) -> Option<Self> {
        if ch.nx2() == 1 {
            let c = ch.marginal_user1(0).capacity().0;
            Some(Self::from_fn(Provenance::ExactClosedForm, move |l| {
                (l.l1() + l.l3()) * c
            }))
        } else if ch.nx1() == 1 {
            let c = ch.marginal_user2(0).capacity().0;
            Some(Self::from_fn(Provenance::ExactClosedForm, move |l| {
                (l.l2() + l.l3()) * c
            }))
        } else {
            None
        }
    }

    /// Best single-letter product-input value, optimized per weight vector.
    pub fn single_letter(ch: &Channel, opts: CLambdaOptions) -> Self {
        let ch = ch.clone();
        Self::from_fn(Provenance::SingleLetterSurrogate, move |l| {
            c_lambda(&ch, l, &opts).value
        })
        .with_resolution(SURROGATE_GRID_RESOLUTION)
    }

    /// Exact surface when the channel is degenerate, surrogate otherwise.
    pub fn for_channel(ch: &Channel) -> Self {
        Self::degenerate(ch).unwrap_or_else(|| Self::single_letter(ch, CLambdaOptions::default()))
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn is_exact(&self) -> bool {
        self.provenance == Provenance::ExactClosedForm
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn eval(&self, l: &LambdaWeights) -> f64 {
        (self.eval)(l).max(0.0)
    }

    /// Values on the cached lattice, in [`lattice`] order.
    pub fn grid(&self) -> &[f64] {
        self.grid.get_or_init(|| {
            let res = self.resolution;
            let mut out = Vec::with_capacity(lattice_len(res));
            for (i, j) in lattice(res) {
                out.push(self.eval(&LambdaWeights::from_lattice(i, j, res)));
            }
            out
        })
    }
}

pub(crate) fn additive_capacity(m: usize, p: f64) -> f64 {
    let mut noise = vec![p; m];
    noise[0] = (1.0 - (m as f64 - 1.0) * p).max(0.0);
    ((m as f64).log2() - entropy_bits(&noise)).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CLambdaOptions {
    /// Random starts in addition to the uniform and lattice seeds.
    pub random_starts: usize,
    pub max_iter: usize,
    /// Stationarity gap below which a run counts as converged (bits).
    pub kkt_tol: f64,
    /// Lattice step for the seed scan over each user's simplex.
    pub seed_grid: usize,
}

impl Default for CLambdaOptions {
    fn default() -> Self {
        Self {
            random_starts: 4,
            max_iter: 4000,
            kkt_tol: 1e-9,
            seed_grid: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CLambdaEstimate {
    pub value: f64,
    pub inputs: InputProduct<f64>,
    pub infos: MutualInfos<f64>,
    /// False when no start reached the stationarity tolerance; `value` is then
    /// the best found.
    pub converged: bool,
}

/// Single-letter `max_{p1 x p2} l1 I1 + l2 I2 + l3 I3`.
///
/// Seeds come from a coarse lattice over both input simplices (when small),
/// the uniform law and a few deterministic pseudo-random points; each seed is
/// climbed by exponentiated-gradient ascent with backtracking.
pub fn c_lambda(ch: &Channel, l: &LambdaWeights, opts: &CLambdaOptions) -> CLambdaEstimate {
    let w = l.as_array();
    let objective = |inp: &InputProduct<f64>| mutual_infos(ch, inp).weighted(w);

    let mut seeds = vec![InputProduct::uniform(ch)];
    let lattice1 = simplex_lattice(ch.nx1(), opts.seed_grid);
    let lattice2 = simplex_lattice(ch.nx2(), opts.seed_grid);
    if lattice1.len() * lattice2.len() <= 4096 {
        let mut scored: Vec<(f64, InputProduct<f64>)> = Vec::new();
        for a in &lattice1 {
            for b in &lattice2 {
                let inp = InputProduct {
                    p1: interiorize(a),
                    p2: interiorize(b),
                };
                scored.push((objective(&inp), inp));
            }
        }
        scored.sort_by(|x, y| y.0.total_cmp(&x.0));
        seeds.extend(scored.into_iter().take(3).map(|(_, s)| s));
    }
    let mut state = 0x9e37_79b9_7f4a_7c15u64;
    for _ in 0..opts.random_starts {
        let p1 = pseudo_random_simplex(ch.nx1(), &mut state);
        let p2 = pseudo_random_simplex(ch.nx2(), &mut state);
        seeds.push(InputProduct { p1, p2 });
    }

    let mut best: Option<CLambdaEstimate> = None;
    for seed in seeds {
        let est = ascend(ch, w, seed, opts);
        let replace = match &best {
            None => true,
            Some(b) => est.value > b.value + 1e-15 || (est.value >= b.value - 1e-15 && est.converged && !b.converged),
        };
        if replace {
            best = Some(est);
        }
    }
    best.expect("at least one seed")
}

fn ascend(ch: &Channel, w: [f64; 3], mut inp: InputProduct<f64>, opts: &CLambdaOptions) -> CLambdaEstimate {
    let f = |inp: &InputProduct<f64>| mutual_infos(ch, inp).weighted(w);
    let mut val = f(&inp);
    let mut eta = 1.0;
    let mut converged = false;
    for _ in 0..opts.max_iter {
        let (g1, g2) = weighted_info_gradient(ch, &inp, w);
        let gap = kkt_gap(&inp.p1, &g1) + kkt_gap(&inp.p2, &g2);
        if gap <= opts.kkt_tol {
            converged = true;
            break;
        }
        let mut accepted = false;
        while eta > 1e-14 {
            let cand = InputProduct {
                p1: mirror_step(&inp.p1, &g1, eta),
                p2: mirror_step(&inp.p2, &g2, eta),
            };
            let cv = f(&cand);
            if cv >= val {
                let stalled = cv - val <= 1e-16;
                inp = cand;
                val = cv;
                eta = (eta * 1.5).min(64.0);
                accepted = !stalled;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            // No ascent direction left at machine precision.
            converged = gap <= opts.kkt_tol.max(1e-7);
            break;
        }
    }
    let infos = mutual_infos(ch, &inp);
    CLambdaEstimate {
        value: infos.weighted(w),
        inputs: inp,
        infos,
        converged,
    }
}

/// `max_a g(a) - E_p[g]`: zero exactly at a stationary point on the simplex
/// (allowing zeros where the gradient is below the mean).
fn kkt_gap(p: &[f64], g: &[f64]) -> f64 {
    let mean: f64 = p.iter().zip(g).map(|(a, b)| a * b).sum();
    let max = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (max - mean).max(0.0)
}

fn mirror_step(p: &[f64], g: &[f64], eta: f64) -> Vec<f64> {
    let gmax = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = p
        .iter()
        .zip(g)
        .map(|(&a, &b)| a * (eta * (b - gmax)).exp2())
        .collect();
    let s: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= s);
    out
}

fn simplex_lattice(n: usize, res: usize) -> Vec<Vec<f64>> {
    fn rec(n: usize, left: usize, res: usize, cur: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if cur.len() == n - 1 {
            cur.push(left as f64 / res as f64);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k as f64 / res as f64);
            rec(n, left - k, res, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n == 1 {
        return vec![vec![1.0]];
    }
    rec(n, res, res, &mut Vec::new(), &mut out);
    out
}

/// Exponentiated-gradient updates cannot leave a face of the simplex, so seeds
/// are nudged into the interior.
fn interiorize(p: &[f64]) -> Vec<f64> {
    let n = p.len() as f64;
    p.iter().map(|v| (v + 1e-3) / (1.0 + 1e-3 * n)).collect()
}

fn pseudo_random_simplex(n: usize, state: &mut u64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            // splitmix64
            *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = *state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^= z >> 31;
            let u = ((z >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
            -u.ln()
        })
        .collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}
