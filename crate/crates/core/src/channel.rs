//! Discrete memoryless channel kernels: the two-user MAC and point-to-point kernels.

use thiserror::Error;

use crate::scalar::{entropy_bits, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("row for inputs ({x1},{x2}) sums to {sum}, not 1")]
    NonStochastic { x1: usize, x2: usize, sum: f64 },
    #[error("negative kernel entry {value} at ({x1},{x2},{y})")]
    NegativeEntry {
        x1: usize,
        x2: usize,
        y: usize,
        value: f64,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("noise level {p} outside [0, 1/(m-1)] for m = {m}")]
    InvalidNoise { m: usize, p: f64 },
}

/// Two-user discrete memoryless MAC `Q(y | x1, x2)`.
///
/// Rows are stored for each `(x1, x2)` in row-major order (`x1` major).
#[derive(Debug, Clone, PartialEq)]
pub struct Channel<T> {
    nx1: usize,
    nx2: usize,
    ny: usize,
    kernel: Vec<T>,
}

fn check_row<T: Scalar>(row: &[T], x1: usize, x2: usize) -> Result<(), ChannelError> {
    let mut sum = T::zero();
    for (y, &v) in row.iter().enumerate() {
        if v.is_nan() || v < T::zero() {
            return Err(ChannelError::NegativeEntry {
                x1,
                x2,
                y,
                value: v.as_f64(),
            });
        }
        sum = sum + v;
    }
    if (sum - T::one()).abs() > T::stochastic_tol() {
        return Err(ChannelError::NonStochastic {
            x1,
            x2,
            sum: sum.as_f64(),
        });
    }
    Ok(())
}

impl<T: Scalar> Channel<T> {
    /// Builds a channel from `nx1 * nx2` rows ordered by `(x1, x2)` with `x1` major.
    pub fn new(nx1: usize, nx2: usize, ny: usize, rows: &[Vec<T>]) -> Result<Self, ChannelError> {
        if nx1 == 0 || nx2 == 0 || ny == 0 {
            return Err(ChannelError::DimensionMismatch(format!(
                "alphabet sizes must be positive, got ({nx1},{nx2},{ny})"
            )));
        }
        if rows.len() != nx1 * nx2 {
            return Err(ChannelError::DimensionMismatch(format!(
                "expected {} rows, got {}",
                nx1 * nx2,
                rows.len()
            )));
        }
        let mut kernel = Vec::with_capacity(nx1 * nx2 * ny);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != ny {
                return Err(ChannelError::DimensionMismatch(format!(
                    "row {r} has length {}, expected {ny}",
                    row.len()
                )));
            }
            check_row(row, r / nx2, r % nx2)?;
            kernel.extend_from_slice(row);
        }
        Ok(Self {
            nx1,
            nx2,
            ny,
            kernel,
        })
    }

    /// Builds a channel from a nested `[x1][x2][y]` array.
    pub fn from_nested(kernel: &[Vec<Vec<T>>]) -> Result<Self, ChannelError> {
        let nx1 = kernel.len();
        let nx2 = kernel.first().map_or(0, Vec::len);
        let ny = kernel.first().and_then(|r| r.first()).map_or(0, Vec::len);
        let mut rows = Vec::with_capacity(nx1 * nx2);
        for (x1, block) in kernel.iter().enumerate() {
            if block.len() != nx2 {
                return Err(ChannelError::DimensionMismatch(format!(
                    "kernel[{x1}] has {} entries, expected {nx2}",
                    block.len()
                )));
            }
            rows.extend(block.iter().cloned());
        }
        Self::new(nx1, nx2, ny, &rows)
    }

    /// `Y = X1 + X2 + N (mod m)` with `P(N = k) = p` for every `k != 0`.
    pub fn additive_mod_m(m: usize, p: T) -> Result<Self, ChannelError> {
        if m < 2 {
            return Err(ChannelError::DimensionMismatch(format!(
                "additive channel needs m >= 2, got {m}"
            )));
        }
        let max_p = T::one() / T::from_count(m - 1);
        if p.is_nan() || p < T::zero() || p > max_p + T::stochastic_tol() {
            return Err(ChannelError::InvalidNoise { m, p: p.as_f64() });
        }
        let p = p.min(max_p);
        let peak = (T::one() - T::from_count(m - 1) * p).max(T::zero());
        let mut rows = Vec::with_capacity(m * m);
        for x1 in 0..m {
            for x2 in 0..m {
                let s = (x1 + x2) % m;
                rows.push((0..m).map(|y| if y == s { peak } else { p }).collect());
            }
        }
        Self::new(m, m, m, &rows)
    }

    /// Two independent point-to-point channels side by side; output `(y1, y2)`
    /// is flattened as `y1 * ny2 + y2`.
    pub fn product(q1: &PtpChannel<T>, q2: &PtpChannel<T>) -> Self {
        let ny = q1.ny * q2.ny;
        let mut kernel = Vec::with_capacity(q1.nx * q2.nx * ny);
        for x1 in 0..q1.nx {
            for x2 in 0..q2.nx {
                for &a in q1.row(x1) {
                    for &b in q2.row(x2) {
                        kernel.push(a * b);
                    }
                }
            }
        }
        Self {
            nx1: q1.nx,
            nx2: q2.nx,
            ny,
            kernel,
        }
    }

    pub fn nx1(&self) -> usize {
        self.nx1
    }

    pub fn nx2(&self) -> usize {
        self.nx2
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Number of input pairs `|X1| * |X2|`.
    pub fn n_pairs(&self) -> usize {
        self.nx1 * self.nx2
    }

    #[inline]
    pub fn pair_index(&self, x1: usize, x2: usize) -> usize {
        debug_assert!(x1 < self.nx1 && x2 < self.nx2);
        x1 * self.nx2 + x2
    }

    #[inline]
    pub fn row(&self, x1: usize, x2: usize) -> &[T] {
        let r = self.pair_index(x1, x2) * self.ny;
        &self.kernel[r..r + self.ny]
    }

    #[inline]
    pub fn row_by_index(&self, pair: usize) -> &[T] {
        &self.kernel[pair * self.ny..(pair + 1) * self.ny]
    }

    #[inline]
    pub fn q(&self, y: usize, x1: usize, x2: usize) -> T {
        self.row(x1, x2)[y]
    }

    /// Kernel rows as a nested `[x1][x2][y]` array.
    pub fn to_nested(&self) -> Vec<Vec<Vec<T>>> {
        (0..self.nx1)
            .map(|x1| (0..self.nx2).map(|x2| self.row(x1, x2).to_vec()).collect())
            .collect()
    }

    /// Point-to-point kernel seen by user 1 while user 2 holds `x2` fixed.
    pub fn marginal_user1(&self, x2: usize) -> PtpChannel<T> {
        PtpChannel {
            nx: self.nx1,
            ny: self.ny,
            kernel: (0..self.nx1).flat_map(|x1| self.row(x1, x2).to_vec()).collect(),
        }
    }

    /// Point-to-point kernel seen by user 2 while user 1 holds `x1` fixed.
    pub fn marginal_user2(&self, x1: usize) -> PtpChannel<T> {
        PtpChannel {
            nx: self.nx2,
            ny: self.ny,
            kernel: (0..self.nx2).flat_map(|x2| self.row(x1, x2).to_vec()).collect(),
        }
    }

    /// Converts the kernel to another scalar width.
    pub fn cast<U: Scalar>(&self) -> Channel<U> {
        Channel {
            nx1: self.nx1,
            nx2: self.nx2,
            ny: self.ny,
            kernel: self.kernel.iter().map(|&v| U::lit(v.as_f64())).collect(),
        }
    }
}

/// Point-to-point DMC `W(y | x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PtpChannel<T> {
    nx: usize,
    ny: usize,
    kernel: Vec<T>,
}

impl<T: Scalar> PtpChannel<T> {
    pub fn new(rows: &[Vec<T>]) -> Result<Self, ChannelError> {
        let nx = rows.len();
        let ny = rows.first().map_or(0, Vec::len);
        if nx == 0 || ny == 0 {
            return Err(ChannelError::DimensionMismatch(
                "point-to-point kernel must be non-empty".into(),
            ));
        }
        let mut kernel = Vec::with_capacity(nx * ny);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != ny {
                return Err(ChannelError::DimensionMismatch(format!(
                    "row {x} has length {}, expected {ny}",
                    row.len()
                )));
            }
            check_row(row, x, 0)?;
            kernel.extend_from_slice(row);
        }
        Ok(Self { nx, ny, kernel })
    }

    /// Binary symmetric channel with crossover `eps`.
    pub fn bsc(eps: T) -> Result<Self, ChannelError> {
        if eps.is_nan() || eps < T::zero() || eps > T::one() {
            return Err(ChannelError::InvalidNoise {
                m: 2,
                p: eps.as_f64(),
            });
        }
        let one = T::one();
        Self::new(&[vec![one - eps, eps], vec![eps, one - eps]])
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn row(&self, x: usize) -> &[T] {
        &self.kernel[x * self.ny..(x + 1) * self.ny]
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        (0..self.nx).map(|x| self.row(x).to_vec()).collect()
    }

    /// Embeds the kernel as a MAC whose second user has a single letter.
    pub fn as_mac(&self) -> Channel<T> {
        Channel {
            nx1: self.nx,
            nx2: 1,
            ny: self.ny,
            kernel: self.kernel.clone(),
        }
    }

    /// Largest divergence between two rows (the zero-rate Burnashev constant), in bits.
    pub fn max_row_divergence(&self) -> T {
        let mut best = T::zero();
        for a in 0..self.nx {
            for b in 0..self.nx {
                best = best.max(crate::info::kl_rows(self.row(a), self.row(b)));
            }
        }
        best
    }

    /// Mutual information `I(X;Y)` in bits for input law `px`.
    pub fn mutual_information(&self, px: &[T]) -> T {
        let mut py = vec![T::zero(); self.ny];
        let mut h_cond = T::zero();
        for (x, &w) in px.iter().enumerate() {
            let row = self.row(x);
            h_cond = h_cond + w * entropy_bits(row);
            for (acc, &q) in py.iter_mut().zip(row) {
                *acc = *acc + w * q;
            }
        }
        (entropy_bits(&py) - h_cond).max(T::zero())
    }

    /// Capacity in bits and a capacity-achieving input law (Blahut–Arimoto).
    pub fn capacity(&self) -> (T, Vec<T>) {
        let n = self.nx;
        let mut px = vec![T::one() / T::from_count(n); n];
        let tol = T::lit(1e-13).max(T::epsilon() * T::lit(16.0));
        let mut d = vec![T::zero(); n];
        for _ in 0..100_000 {
            let mut py = vec![T::zero(); self.ny];
            for (x, &w) in px.iter().enumerate() {
                for (acc, &q) in py.iter_mut().zip(self.row(x)) {
                    *acc = *acc + w * q;
                }
            }
            for (x, dx) in d.iter_mut().enumerate() {
                *dx = crate::info::kl_rows(self.row(x), &py);
            }
            let lower = px
                .iter()
                .zip(&d)
                .fold(T::zero(), |acc, (&w, &dx)| acc + w * dx);
            let upper = d.iter().fold(T::neg_infinity(), |acc, &dx| acc.max(dx));
            if upper - lower <= tol {
                break;
            }
            let mut z = T::zero();
            for (w, &dx) in px.iter_mut().zip(&d) {
                *w = *w * T::lit(2.0).powf(dx);
                z = z + *w;
            }
            for w in &mut px {
                *w = *w / z;
            }
        }
        (self.mutual_information(&px), px)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn additive_kernel_shapes() {
        let ch = Channel::<f64>::additive_mod_m(3, 0.1).unwrap();
        assert_eq!((ch.nx1(), ch.nx2(), ch.ny()), (3, 3, 3));
        assert!((ch.q(0, 0, 0) - 0.8).abs() < 1e-15);
        assert!((ch.q(1, 2, 2) - 0.8).abs() < 1e-15);
        assert!((ch.q(0, 2, 2) - 0.1).abs() < 1e-15);

        let noiseless = Channel::<f64>::additive_mod_m(3, 0.0).unwrap();
        for x1 in 0..3 {
            for x2 in 0..3 {
                for y in 0..3 {
                    let want = if y == (x1 + x2) % 3 { 1.0 } else { 0.0 };
                    assert_eq!(noiseless.q(y, x1, x2), want);
                }
            }
        }

        let useless = Channel::<f64>::additive_mod_m(3, 1.0 / 3.0).unwrap();
        for x in 0..9 {
            for &v in useless.row_by_index(x) {
                assert!((v - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_bad_noise() {
        assert!(matches!(
            Channel::<f64>::additive_mod_m(3, 0.6),
            Err(ChannelError::InvalidNoise { .. })
        ));
        assert!(matches!(
            Channel::<f64>::additive_mod_m(3, -0.1),
            Err(ChannelError::InvalidNoise { .. })
        ));
    }

    #[test]
    fn validation_errors() {
        let bad_sum = vec![vec![0.5, 0.4], vec![0.5, 0.5]];
        assert!(matches!(
            Channel::<f64>::new(2, 1, 2, &bad_sum),
            Err(ChannelError::NonStochastic { x1: 0, x2: 0, .. })
        ));
        let neg = vec![vec![1.1, -0.1], vec![0.5, 0.5]];
        assert!(matches!(
            Channel::<f64>::new(2, 1, 2, &neg),
            Err(ChannelError::NegativeEntry { y: 1, .. })
        ));
        let short = vec![vec![1.0, 0.0]];
        assert!(matches!(
            Channel::<f64>::new(2, 1, 2, &short),
            Err(ChannelError::DimensionMismatch(_))
        ));
        assert!(matches!(
            Channel::<f64>::new(0, 1, 2, &[]),
            Err(ChannelError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn product_of_bscs() {
        let bsc = PtpChannel::<f64>::bsc(0.1).unwrap();
        let ch = Channel::product(&bsc, &bsc);
        assert_eq!((ch.nx1(), ch.nx2(), ch.ny()), (2, 2, 4));
        for x1 in 0..2 {
            for x2 in 0..2 {
                let row = ch.row(x1, x2);
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                for y1 in 0..2 {
                    for y2 in 0..2 {
                        let want = bsc.row(x1)[y1] * bsc.row(x2)[y2];
                        assert_eq!(row[y1 * 2 + y2], want);
                    }
                }
            }
        }
        let id = PtpChannel::<f64>::new(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let det = Channel::product(&id, &id);
        for pair in 0..4 {
            assert_eq!(det.row_by_index(pair).iter().filter(|&&v| v == 1.0).count(), 1);
        }
    }

    #[test]
    fn bsc_capacity() {
        let bsc = PtpChannel::<f64>::bsc(0.1).unwrap();
        let (c, px) = bsc.capacity();
        let want = 1.0 - crate::scalar::binary_entropy(0.1);
        assert!((c - want).abs() < 1e-12, "{c} vs {want}");
        assert!((px[0] - 0.5).abs() < 1e-9);
        // Z-channel: asymmetric optimum, compare against a fine scan.
        let z = PtpChannel::<f64>::new(&[vec![1.0, 0.0], vec![0.3, 0.7]]).unwrap();
        let (cz, _) = z.capacity();
        let scan = (0..=100_000)
            .map(|k| z.mutual_information(&[1.0 - k as f64 / 1e5, k as f64 / 1e5]))
            .fold(0.0, f64::max);
        assert!((cz - scan).abs() < 1e-9);
    }

    #[test]
    fn f32_channel() {
        let ch = Channel::<f32>::additive_mod_m(3, 0.1).unwrap();
        assert!((ch.q(0, 0, 0) - 0.8).abs() < 1e-6);
        let wide: Channel<f64> = ch.cast();
        assert!((wide.q(0, 0, 0) - 0.8).abs() < 1e-6);
    }
}
