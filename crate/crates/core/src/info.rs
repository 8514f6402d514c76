//! Pointwise divergences, entropies and mutual informations of a MAC, in bits.

use thiserror::Error;

use crate::channel::Channel;
use crate::scalar::{entropy_bits, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistributionError {
    #[error("distribution has {got} entries, expected {expected}")]
    WrongLength { expected: usize, got: usize },
    #[error("entry {index} is negative or NaN")]
    NegativeEntry { index: usize },
    #[error("distribution sums to {sum}, not 1")]
    NotNormalized { sum: f64 },
}

fn check_simplex<T: Scalar>(w: &[T], expected: usize) -> Result<(), DistributionError> {
    if w.len() != expected {
        return Err(DistributionError::WrongLength {
            expected,
            got: w.len(),
        });
    }
    let mut sum = T::zero();
    for (index, &v) in w.iter().enumerate() {
        if v.is_nan() || v < T::zero() {
            return Err(DistributionError::NegativeEntry { index });
        }
        sum = sum + v;
    }
    if (sum - T::one()).abs() > T::stochastic_tol() {
        return Err(DistributionError::NotNormalized { sum: sum.as_f64() });
    }
    Ok(())
}

/// `D(p || q)` in bits; `+inf` when `p` puts mass where `q` has none.
pub fn kl_rows<T: Scalar>(p: &[T], q: &[T]) -> T {
    let floor = T::zero_floor();
    let mut acc = T::zero();
    for (&a, &b) in p.iter().zip(q) {
        if a <= floor {
            continue;
        }
        if b <= floor {
            return T::infinity();
        }
        acc = acc + a * (a / b).log2();
    }
    acc.max(T::zero())
}

/// `D_Q(x1,x2 || z1,z2)` between the two output rows, in bits.
pub fn kl_pair<T: Scalar>(ch: &Channel<T>, x: (usize, usize), z: (usize, usize)) -> T {
    kl_rows(ch.row(x.0, x.1), ch.row(z.0, z.1))
}

/// Which coordinates of the reference pair the alternative replaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    /// Only user 1 deviates: compares `(x1,x2)` with `(z1,x2)`.
    User1,
    /// Only user 2 deviates: compares `(x1,x2)` with `(x1,z2)`.
    User2,
    /// Both deviate: compares `(x1,x2)` with `(z1,z2)`.
    Both,
}

impl Objective {
    pub const ALL: [Objective; 3] = [Objective::User1, Objective::User2, Objective::Both];

    /// 1-based index used in reports (`1`, `2`, `3`).
    pub fn index(self) -> usize {
        match self {
            Objective::User1 => 1,
            Objective::User2 => 2,
            Objective::Both => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            1 => Some(Objective::User1),
            2 => Some(Objective::User2),
            3 => Some(Objective::Both),
            _ => None,
        }
    }

    /// Alternative pair compared against `x` when the deviation is `z`.
    #[inline]
    pub fn alternative(self, x: (usize, usize), z: (usize, usize)) -> (usize, usize) {
        match self {
            Objective::User1 => (z.0, x.1),
            Objective::User2 => (x.0, z.1),
            Objective::Both => z,
        }
    }
}

/// A quadruple `(x1, x2, z1, z2)` of input letters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Quad {
    pub x1: usize,
    pub x2: usize,
    pub z1: usize,
    pub z2: usize,
}

impl Quad {
    pub fn new(x1: usize, x2: usize, z1: usize, z2: usize) -> Self {
        Self { x1, x2, z1, z2 }
    }

    pub fn reference(&self) -> (usize, usize) {
        (self.x1, self.x2)
    }

    pub fn deviation(&self) -> (usize, usize) {
        (self.z1, self.z2)
    }

    /// Dense index over `X1 x X2 x X1 x X2`.
    pub fn index<T: Scalar>(&self, ch: &Channel<T>) -> usize {
        ch.pair_index(self.x1, self.x2) * ch.n_pairs() + ch.pair_index(self.z1, self.z2)
    }

    pub fn from_index<T: Scalar>(ch: &Channel<T>, idx: usize) -> Self {
        let np = ch.n_pairs();
        let (a, b) = (idx / np, idx % np);
        Self {
            x1: a / ch.nx2(),
            x2: a % ch.nx2(),
            z1: b / ch.nx2(),
            z2: b % ch.nx2(),
        }
    }

    /// Every quadruple of the channel, in index order.
    pub fn all<T: Scalar>(ch: &Channel<T>) -> impl Iterator<Item = Quad> + '_ {
        let n = ch.n_pairs() * ch.n_pairs();
        (0..n).map(move |i| Quad::from_index(ch, i))
    }
}

/// `D_i(x1,x2 || z1,z2)` for the chosen objective.
pub fn d_pointwise<T: Scalar>(ch: &Channel<T>, obj: Objective, q: Quad) -> T {
    kl_pair(ch, q.reference(), obj.alternative(q.reference(), q.deviation()))
}

/// Largest pointwise divergence `D_i` over all quadruples; may be `+inf`.
pub fn d_i_max<T: Scalar>(ch: &Channel<T>, obj: Objective) -> T {
    Quad::all(ch).fold(T::zero(), |acc, q| acc.max(d_pointwise(ch, obj, q)))
}

/// Smallest kernel entry.
pub fn zeta<T: Scalar>(ch: &Channel<T>) -> T {
    (0..ch.n_pairs())
        .flat_map(|p| ch.row_by_index(p).iter().copied())
        .fold(T::infinity(), T::min)
}

/// Probability law over quadruples `(x1, x2, z1, z2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadDistribution<T> {
    nx1: usize,
    nx2: usize,
    weights: Vec<T>,
}

impl<T: Scalar> QuadDistribution<T> {
    /// Weights indexed by [`Quad::index`].
    pub fn new(ch: &Channel<T>, weights: Vec<T>) -> Result<Self, DistributionError> {
        check_simplex(&weights, ch.n_pairs() * ch.n_pairs())?;
        Ok(Self {
            nx1: ch.nx1(),
            nx2: ch.nx2(),
            weights,
        })
    }

    pub fn point_mass(ch: &Channel<T>, q: Quad) -> Self {
        let mut weights = vec![T::zero(); ch.n_pairs() * ch.n_pairs()];
        weights[q.index(ch)] = T::one();
        Self {
            nx1: ch.nx1(),
            nx2: ch.nx2(),
            weights,
        }
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx1, self.nx2)
    }

    /// Nonzero atoms with their weights.
    pub fn support<'a>(&'a self, ch: &'a Channel<T>) -> impl Iterator<Item = (Quad, T)> + 'a {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > T::zero())
            .map(move |(i, &w)| (Quad::from_index(ch, i), w))
    }

    /// `E_P[D_i(X1,X2 || Z1,Z2)]`.
    pub fn expected_divergence(&self, ch: &Channel<T>, obj: Objective) -> T {
        self.support(ch)
            .fold(T::zero(), |acc, (q, w)| acc + w * d_pointwise(ch, obj, q))
    }
}

/// Independent single-letter input laws for the two users.
#[derive(Debug, Clone, PartialEq)]
pub struct InputProduct<T> {
    pub p1: Vec<T>,
    pub p2: Vec<T>,
}

impl<T: Scalar> InputProduct<T> {
    pub fn new(ch: &Channel<T>, p1: Vec<T>, p2: Vec<T>) -> Result<Self, DistributionError> {
        check_simplex(&p1, ch.nx1())?;
        check_simplex(&p2, ch.nx2())?;
        Ok(Self { p1, p2 })
    }

    pub fn uniform(ch: &Channel<T>) -> Self {
        Self {
            p1: vec![T::one() / T::from_count(ch.nx1()); ch.nx1()],
            p2: vec![T::one() / T::from_count(ch.nx2()); ch.nx2()],
        }
    }
}

/// `(I(X1;Y|X2), I(X2;Y|X1), I(X1X2;Y))` in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MutualInfos<T> {
    pub i1: T,
    pub i2: T,
    pub i3: T,
}

impl<T: Scalar> MutualInfos<T> {
    pub fn weighted(&self, l: [T; 3]) -> T {
        l[0] * self.i1 + l[1] * self.i2 + l[2] * self.i3
    }
}

/// Mutual informations under `p1 x p2 x Q`.
pub fn mutual_infos<T: Scalar>(ch: &Channel<T>, inputs: &InputProduct<T>) -> MutualInfos<T> {
    let (p1, p2) = (&inputs.p1, &inputs.p2);
    let ny = ch.ny();
    let mut py = vec![T::zero(); ny];
    let mut h_y_x1x2 = T::zero();
    let mut h_y_x1 = T::zero();
    let mut h_y_x2 = T::zero();
    let mut buf = vec![T::zero(); ny];

    for x1 in 0..ch.nx1() {
        buf.iter_mut().for_each(|v| *v = T::zero());
        for x2 in 0..ch.nx2() {
            let w = p1[x1] * p2[x2];
            let row = ch.row(x1, x2);
            h_y_x1x2 = h_y_x1x2 + w * entropy_bits(row);
            for y in 0..ny {
                py[y] = py[y] + w * row[y];
                buf[y] = buf[y] + p2[x2] * row[y];
            }
        }
        h_y_x1 = h_y_x1 + p1[x1] * entropy_bits(&buf);
    }
    for x2 in 0..ch.nx2() {
        buf.iter_mut().for_each(|v| *v = T::zero());
        for x1 in 0..ch.nx1() {
            for (b, &q) in buf.iter_mut().zip(ch.row(x1, x2)) {
                *b = *b + p1[x1] * q;
            }
        }
        h_y_x2 = h_y_x2 + p2[x2] * entropy_bits(&buf);
    }
    let h_y = entropy_bits(&py);
    let z = T::zero();
    MutualInfos {
        i1: (h_y_x2 - h_y_x1x2).max(z),
        i2: (h_y_x1 - h_y_x1x2).max(z),
        i3: (h_y - h_y_x1x2).max(z),
    }
}

/// Gradient of `sum_i l_i I_i` with respect to `p1` (first) and `p2` (second),
/// up to an additive constant per user (irrelevant on the simplex).
pub(crate) fn weighted_info_gradient<T: Scalar>(
    ch: &Channel<T>,
    inputs: &InputProduct<T>,
    l: [T; 3],
) -> (Vec<T>, Vec<T>) {
    let (p1, p2) = (&inputs.p1, &inputs.p2);
    let (n1, n2, ny) = (ch.nx1(), ch.nx2(), ch.ny());
    let nlog = |v: T| {
        if v <= T::zero_floor() {
            T::zero()
        } else {
            -v.log2()
        }
    };

    let mut py = vec![T::zero(); ny];
    // P(y | x2) and P(y | x1)
    let mut py_x2 = vec![T::zero(); n2 * ny];
    let mut py_x1 = vec![T::zero(); n1 * ny];
    for x1 in 0..n1 {
        for x2 in 0..n2 {
            let row = ch.row(x1, x2);
            for y in 0..ny {
                py[y] = py[y] + p1[x1] * p2[x2] * row[y];
                py_x2[x2 * ny + y] = py_x2[x2 * ny + y] + p1[x1] * row[y];
                py_x1[x1 * ny + y] = py_x1[x1 * ny + y] + p2[x2] * row[y];
            }
        }
    }
    let h_x1 = |x1: usize| entropy_bits(&py_x1[x1 * ny..(x1 + 1) * ny]);
    let h_x2 = |x2: usize| entropy_bits(&py_x2[x2 * ny..(x2 + 1) * ny]);

    let mut g1 = vec![T::zero(); n1];
    for (a, g) in g1.iter_mut().enumerate() {
        let mut d3 = T::zero();
        let mut d1 = T::zero();
        let mut hc = T::zero();
        for x2 in 0..n2 {
            let row = ch.row(a, x2);
            hc = hc + p2[x2] * entropy_bits(row);
            for y in 0..ny {
                d3 = d3 + p2[x2] * row[y] * nlog(py[y]);
                d1 = d1 + p2[x2] * row[y] * nlog(py_x2[x2 * ny + y]);
            }
        }
        *g = l[0] * (d1 - hc) + l[1] * (h_x1(a) - hc) + l[2] * (d3 - hc);
    }
    let mut g2 = vec![T::zero(); n2];
    for (b, g) in g2.iter_mut().enumerate() {
        let mut d3 = T::zero();
        let mut d2 = T::zero();
        let mut hc = T::zero();
        for x1 in 0..n1 {
            let row = ch.row(x1, b);
            hc = hc + p1[x1] * entropy_bits(row);
            for y in 0..ny {
                d3 = d3 + p1[x1] * row[y] * nlog(py[y]);
                d2 = d2 + p1[x1] * row[y] * nlog(py_x1[x1 * ny + y]);
            }
        }
        *g = l[0] * (h_x2(b) - hc) + l[1] * (d2 - hc) + l[2] * (d3 - hc);
    }
    (g1, g2)
}
