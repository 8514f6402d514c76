//! Max-min linear programs over the probability simplex.
//!
//! Solves `max_p min_i (A p)_i` with `p` ranging over distributions on the
//! columns of a small dense payoff matrix `A`. The primal solver runs a dense
//! tableau simplex with Bland's rule on the epigraph form
//! `max t  s.t.  t <= (A p)_i,  sum(p) <= 1,  p >= 0`.
//! [`solve_minmax_dual_grid`] evaluates the dual `min_lambda max_q lambda . A_q`
//! on a lattice of the weight simplex and serves as an independent check.

use thiserror::Error;

use crate::scalar::Scalar;

/// Infinite payoffs are replaced by this many bits before pivoting.
pub const INFINITY_CAP: f64 = 1e6;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const MAX_PIVOTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("payoff matrix must have at least one row and one column")]
    Empty,
    #[error("payoff matrix entry ({row},{col}) is NaN")]
    NaNEntry { row: usize, col: usize },
    #[error("payoff matrix data has {got} entries, expected {expected}")]
    Shape { expected: usize, got: usize },
    #[error("problem is infeasible")]
    Infeasible,
    #[error("simplex failed to converge within {pivots} pivots")]
    NumericalFailure { pivots: usize },
}

/// Dense `k x n` payoff matrix; entries may be `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffMatrix<T> {
    rows: usize,
    cols: usize,
    entries: Vec<T>,
}

impl<T: Scalar> PayoffMatrix<T> {
    /// Row-major entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<T>) -> Result<Self, LpError> {
        if rows == 0 || cols == 0 {
            return Err(LpError::Empty);
        }
        if entries.len() != rows * cols {
            return Err(LpError::Shape {
                expected: rows * cols,
                got: entries.len(),
            });
        }
        if let Some(i) = entries.iter().position(|v| v.is_nan()) {
            return Err(LpError::NaNEntry {
                row: i / cols,
                col: i % cols,
            });
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, LpError> {
        let k = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(k * n);
        for r in rows {
            if r.len() != n {
                return Err(LpError::Shape {
                    expected: k * n,
                    got: k * r.len(),
                });
            }
            entries.extend_from_slice(r);
        }
        Self::new(k, n, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.entries[row * self.cols + col]
    }

    fn capped(&self, row: usize, col: usize) -> T {
        self.get(row, col).min(T::lit(INFINITY_CAP))
    }

    /// `(A p)_i` for every row, using capped entries.
    pub fn row_values(&self, p: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .filter(|&q| p[q] > T::zero())
                    .fold(T::zero(), |acc, q| acc + self.capped(i, q) * p[q])
            })
            .collect()
    }

    /// Multiplies every entry by `c`.
    pub fn scaled(&self, c: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|&v| v * c).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxMinSolution<T> {
    /// Optimal value of `max_p min_i (A p)_i`.
    pub value: T,
    pub distribution: Vec<T>,
    /// Rows attaining the minimum at the returned distribution.
    pub active_rows: Vec<usize>,
    pub iterations: usize,
}

struct Tableau<T> {
    // (m + 1) x (width + 1); last row is the reduced-cost row, last column the rhs.
    data: Vec<T>,
    m: usize,
    width: usize,
    basis: Vec<usize>,
}

impl<T: Scalar> Tableau<T> {
    #[inline]
    fn at(&self, r: usize, c: usize) -> T {
        self.data[r * (self.width + 1) + c]
    }

    #[inline]
    fn at_mut(&mut self, r: usize, c: usize) -> &mut T {
        &mut self.data[r * (self.width + 1) + c]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width + 1;
        let inv = T::one() / self.at(pr, pc);
        for c in 0..w {
            *self.at_mut(pr, c) = self.at(pr, c) * inv;
        }
        for r in 0..=self.m {
            if r == pr {
                continue;
            }
            let f = self.at(r, pc);
            if f == T::zero() {
                continue;
            }
            for c in 0..w {
                let v = self.at(r, c) - f * self.at(pr, c);
                *self.at_mut(r, c) = v;
            }
        }
        self.basis[pr] = pc;
    }
}

/// Solves `max_p min_i (A p)_i` over the simplex.
///
/// `+inf` entries are capped at [`INFINITY_CAP`]; the value is reported as
/// `+inf` only when every row has an infinite entry, since mixing those
/// columns makes every objective infinite.
pub fn solve_maxmin<T: Scalar>(a: &PayoffMatrix<T>, tol: T) -> Result<MaxMinSolution<T>, LpError> {
    let (k, n) = (a.rows, a.cols);

    let inf_cols: Vec<Option<usize>> = (0..k)
        .map(|i| (0..n).find(|&q| a.get(i, q).is_infinite()))
        .collect();
    if inf_cols.iter().all(Option::is_some) {
        let mut cols: Vec<usize> = inf_cols.into_iter().flatten().collect();
        cols.sort_unstable();
        cols.dedup();
        let w = T::one() / T::from_count(cols.len());
        let mut distribution = vec![T::zero(); n];
        for c in cols {
            distribution[c] = w;
        }
        return Ok(MaxMinSolution {
            value: T::infinity(),
            distribution,
            active_rows: (0..k).collect(),
            iterations: 0,
        });
    }

    // Affine rescale into [1, 2] so t stays positive and pivots are well scaled.
    let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
    for i in 0..k {
        for q in 0..n {
            let v = a.capped(i, q);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let span = if hi > lo { hi - lo } else { T::one() };
    let norm = |v: T| (v - lo) / span + T::one();

    // Columns: p_0..p_{n-1}, t, s_0..s_{k-1}, s_sum.
    let t_col = n;
    let width = n + 1 + k + 1;
    let m = k + 1;
    let mut tab = Tableau {
        data: vec![T::zero(); (m + 1) * (width + 1)],
        m,
        width,
        basis: (0..m).map(|r| n + 1 + r).collect(),
    };
    for i in 0..k {
        for q in 0..n {
            *tab.at_mut(i, q) = -norm(a.capped(i, q));
        }
        *tab.at_mut(i, t_col) = T::one();
        *tab.at_mut(i, n + 1 + i) = T::one();
    }
    for q in 0..n {
        *tab.at_mut(k, q) = T::one();
    }
    *tab.at_mut(k, n + 1 + k) = T::one();
    *tab.at_mut(k, width) = T::one();
    *tab.at_mut(m, t_col) = -T::one();

    let eps = T::epsilon() * T::lit(64.0);
    let mut iterations = 0;
    loop {
        // Bland: lowest-index improving column.
        let Some(pc) = (0..width).find(|&c| tab.at(m, c) < -eps) else {
            break;
        };
        let mut best: Option<(usize, T)> = None;
        for r in 0..m {
            let coef = tab.at(r, pc);
            if coef > eps {
                let ratio = tab.at(r, width) / coef;
                best = match best {
                    None => Some((r, ratio)),
                    Some((br, bv)) => {
                        if ratio < bv - eps || (ratio <= bv + eps && tab.basis[r] < tab.basis[br]) {
                            Some((r, ratio))
                        } else {
                            Some((br, bv))
                        }
                    }
                };
            }
        }
        // t is bounded by the normalized payoffs, so an entering column always has a pivot row.
        let Some((pr, _)) = best else {
            return Err(LpError::Infeasible);
        };
        tab.pivot(pr, pc);
        iterations += 1;
        if iterations >= MAX_PIVOTS {
            return Err(LpError::NumericalFailure { pivots: iterations });
        }
    }

    let mut p = vec![T::zero(); n];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < n {
            p[b] = tab.at(r, width).max(T::zero());
        }
    }
    let prune = T::lit(1e-10);
    for v in &mut p {
        if *v < prune {
            *v = T::zero();
        }
    }
    let total = p.iter().fold(T::zero(), |acc, &v| acc + v);
    if total <= T::zero() {
        return Err(LpError::NumericalFailure { pivots: iterations });
    }
    for v in &mut p {
        *v = *v / total;
    }

    let row_vals = a.row_values(&p);
    let value = row_vals.iter().fold(T::infinity(), |acc, &v| acc.min(v));
    let slack = tol.max(T::lit(1e-8)) * (T::one() + value.abs());
    let active_rows = row_vals
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= value + slack)
        .map(|(i, _)| i)
        .collect();
    Ok(MaxMinSolution {
        value,
        distribution: p,
        active_rows,
        iterations,
    })
}

/// `min_lambda max_q sum_i lambda_i A[i][q]` over the lattice of weight
/// vectors with denominator `resolution`.
///
/// Upper-bounds the max-min value (weak duality) and converges to it as the
/// resolution grows. The last coordinate pair is minimized by bisection on
/// the discrete slope, exploiting convexity of the dual objective along lattice
/// lines; the result is still the exact lattice minimum.
pub fn solve_minmax_dual_grid<T: Scalar>(a: &PayoffMatrix<T>, resolution: usize) -> T {
    assert!(resolution >= 2, "grid resolution must be at least 2");
    let k = a.rows;
    // Every weight vector puts mass on some row; if each row has a `+inf`
    // entry, every dual value is `+inf`.
    if (0..k).all(|i| (0..a.cols).any(|q| a.get(i, q).is_infinite())) {
        return T::infinity();
    }
    if k == 1 {
        return (0..a.cols).fold(T::neg_infinity(), |acc, q| acc.max(a.capped(0, q)));
    }
    let r = T::from_count(resolution);
    let mut lambda = vec![T::zero(); k];
    let mut best = T::infinity();
    let mut prefix = vec![0usize; k.saturating_sub(2)];
    enumerate_prefix(a, resolution, r, &mut prefix, 0, 0, &mut lambda, &mut best);
    best
}

#[allow(clippy::too_many_arguments)]
fn enumerate_prefix<T: Scalar>(
    a: &PayoffMatrix<T>,
    resolution: usize,
    r: T,
    prefix: &mut [usize],
    depth: usize,
    used: usize,
    lambda: &mut [T],
    best: &mut T,
) {
    let k = a.rows;
    if depth == prefix.len() {
        let rest = resolution - used;
        let dual = |j: usize, lambda: &mut [T]| {
            lambda[k - 2] = T::from_count(j) / r;
            lambda[k - 1] = T::from_count(rest - j) / r;
            (0..a.cols).fold(T::neg_infinity(), |acc, q| {
                let s = (0..k).fold(T::zero(), |s, i| s + lambda[i] * a.capped(i, q));
                acc.max(s)
            })
        };
        // First j whose forward difference is nonnegative is a lattice minimizer.
        let (mut lo, mut hi) = (0usize, rest);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if dual(mid + 1, lambda) >= dual(mid, lambda) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let v = dual(lo, lambda);
        if v < *best {
            *best = v;
        }
        return;
    }
    for c in 0..=(resolution - used) {
        prefix[depth] = c;
        lambda[depth] = T::from_count(c) / r;
        enumerate_prefix(a, resolution, r, prefix, depth + 1, used + c, lambda, best);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> PayoffMatrix<f64> {
        PayoffMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn single_entry() {
        let a = m(&[&[1.0]]);
        let s = solve_maxmin(&a, 1e-9).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
        assert_eq!(s.distribution, vec![1.0]);
        assert_eq!(solve_minmax_dual_grid(&a, 7), 1.0);
    }

    #[test]
    fn matching_pennies() {
        let a = m(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let s = solve_maxmin(&a, 1e-9).unwrap();
        assert!((s.value - 0.5).abs() < 1e-12);
        assert!((s.distribution[0] - 0.5).abs() < 1e-12);
        assert_eq!(s.active_rows, vec![0, 1]);
        let g = solve_minmax_dual_grid(&a, 1000);
        assert!((g - 0.5).abs() < 1e-3);
    }

    #[test]
    fn identical_rows_pick_argmax() {
        let a = m(&[&[0.3, 2.5, 1.0], &[0.3, 2.5, 1.0], &[0.3, 2.5, 1.0]]);
        let s = solve_maxmin(&a, 1e-9).unwrap();
        assert!((s.value - 2.5).abs() < 1e-12);
        assert_eq!(s.distribution, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn infinite_entries() {
        let inf = f64::INFINITY;
        let all = m(&[&[inf, 1.0], &[2.0, inf]]);
        assert!(solve_maxmin(&all, 1e-9).unwrap().value.is_infinite());
        assert!(solve_minmax_dual_grid(&all, 10).is_infinite());
        // Row 1 is finite everywhere; row 0 becomes infinite with any mass on
        // column 0, so the supremum is approached by p -> (0, 1) and equals 3.
        let some = m(&[&[inf, 1.0], &[2.0, 3.0]]);
        let s = solve_maxmin(&some, 1e-9).unwrap();
        assert!((s.value - 3.0).abs() < 1e-5, "{}", s.value);
    }

    #[test]
    fn rejects_nan() {
        assert!(matches!(
            PayoffMatrix::new(1, 2, vec![0.0, f64::NAN]),
            Err(LpError::NaNEntry { row: 0, col: 1 })
        ));
    }

    #[test]
    fn generic_over_f32() {
        let a = PayoffMatrix::<f32>::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let s = solve_maxmin(&a, 1e-6).unwrap();
        assert!((s.value - 0.5).abs() < 1e-6);
    }
}
