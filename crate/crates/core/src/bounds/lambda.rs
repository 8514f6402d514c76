//! Weight vectors on the 2-simplex and minimization over them.

use crate::bounds::BoundsError;

/// Weights `(l1, l2, l3)` on the three rate constraints `R1`, `R2`, `R1 + R2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaWeights {
    l: [f64; 3],
}

impl LambdaWeights {
    pub fn new(l1: f64, l2: f64, l3: f64) -> Result<Self, BoundsError> {
        let l = [l1, l2, l3];
        if l.iter().any(|v| v.is_nan() || *v < 0.0) || (l1 + l2 + l3 - 1.0).abs() > 1e-12 {
            return Err(BoundsError::InvalidLambda(l));
        }
        Ok(Self { l })
    }

    /// Projects nonnegative weights (not all zero) onto the simplex by rescaling.
    pub fn normalized(l1: f64, l2: f64, l3: f64) -> Result<Self, BoundsError> {
        let l = [l1.max(0.0), l2.max(0.0), l3.max(0.0)];
        let s: f64 = l.iter().sum();
        if !(s > 0.0) || l.iter().any(|v| !v.is_finite()) {
            return Err(BoundsError::InvalidLambda([l1, l2, l3]));
        }
        Ok(Self {
            l: [l[0] / s, l[1] / s, l[2] / s],
        })
    }

    pub(crate) fn from_lattice(i: usize, j: usize, res: usize) -> Self {
        let r = res as f64;
        let (a, b) = (i as f64 / r, j as f64 / r);
        Self {
            l: [a, b, (1.0 - a - b).max(0.0)],
        }
    }

    pub fn l1(&self) -> f64 {
        self.l[0]
    }

    pub fn l2(&self) -> f64 {
        self.l[1]
    }

    pub fn l3(&self) -> f64 {
        self.l[2]
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.l
    }

    /// Normal of the half-plane `(l1 + l3) R1 + (l2 + l3) R2 <= C`.
    pub fn rate_normal(&self) -> (f64, f64) {
        (self.l[0] + self.l[2], self.l[1] + self.l[2])
    }
}

/// Every lattice point `(i/res, j/res, 1 - (i+j)/res)` in a fixed order.
pub(crate) fn lattice(res: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..=res).flat_map(move |i| (0..=res - i).map(move |j| (i, j)))
}

pub(crate) fn lattice_len(res: usize) -> usize {
    (res + 1) * (res + 2) / 2
}

/// Whether `cand` beats `best` with ties broken toward smaller `l3`, then smaller `l1`.
fn better(cand: (f64, LambdaWeights), best: (f64, LambdaWeights)) -> bool {
    const TIE: f64 = 1e-13;
    if cand.0 < best.0 - TIE {
        return true;
    }
    if cand.0 > best.0 + TIE {
        return false;
    }
    let (c, b) = (cand.1.l, best.1.l);
    (c[2], c[0]) < (b[2], b[0])
}

/// Minimizes `f` over the simplex: lattice scan, then Nelder–Mead from the
/// best lattice point. `grid_values` may supply precomputed lattice values.
pub(crate) fn minimize_on_simplex<F>(f: F, res: usize, grid_values: Option<&[f64]>) -> (f64, LambdaWeights)
where
    F: Fn(&LambdaWeights) -> f64,
{
    let mut best: Option<(f64, LambdaWeights)> = None;
    for (k, (i, j)) in lattice(res).enumerate() {
        let lw = LambdaWeights::from_lattice(i, j, res);
        let v = match grid_values {
            Some(g) => g[k],
            None => f(&lw),
        };
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if best.is_none_or(|b| better((v, lw), b)) {
            best = Some((v, lw));
        }
    }
    let (grid_val, grid_lw) = best.expect("lattice is non-empty");
    if !grid_val.is_finite() {
        return (grid_val, grid_lw);
    }

    let penalized = |x: [f64; 2]| -> f64 {
        let (a, b) = (x[0], x[1]);
        if a < 0.0 || b < 0.0 || a + b > 1.0 {
            return f64::INFINITY;
        }
        let lw = LambdaWeights {
            l: [a, b, (1.0 - a - b).max(0.0)],
        };
        let v = f(&lw);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let step = 1.0 / res as f64;
    let (x, v) = nelder_mead(penalized, [grid_lw.l[0], grid_lw.l[1]], step, 1e-14, 400);
    let refined = LambdaWeights {
        l: [x[0], x[1], (1.0 - x[0] - x[1]).max(0.0)],
    };
    // Keep the lattice point unless the refinement is strictly better.
    if v < grid_val - 1e-13 {
        (v, refined)
    } else {
        (grid_val, grid_lw)
    }
}

/// Plain Nelder–Mead in two dimensions.
fn nelder_mead<F>(f: F, start: [f64; 2], step: f64, ftol: f64, max_iter: usize) -> ([f64; 2], f64)
where
    F: Fn([f64; 2]) -> f64,
{
    let mut simplex = [
        start,
        [start[0] + step, start[1]],
        [start[0], start[1] + step],
    ];
    // Keep the initial simplex feasible when starting on an edge.
    for p in simplex.iter_mut().skip(1) {
        if !f(*p).is_finite() {
            *p = [
                (start[0] - (p[0] - start[0])).max(0.0),
                (start[1] - (p[1] - start[1])).max(0.0),
            ];
        }
    }
    let mut vals = simplex.map(&f);
    for _ in 0..max_iter {
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let (b, m, w) = (idx[0], idx[1], idx[2]);
        if (vals[w] - vals[b]).abs() <= ftol && vals[w].is_finite() {
            break;
        }
        let centroid = [
            (simplex[b][0] + simplex[m][0]) / 2.0,
            (simplex[b][1] + simplex[m][1]) / 2.0,
        ];
        let along = |t: f64| {
            [
                centroid[0] + t * (simplex[w][0] - centroid[0]),
                centroid[1] + t * (simplex[w][1] - centroid[1]),
            ]
        };
        let xr = along(-1.0);
        let fr = f(xr);
        if fr < vals[b] {
            let xe = along(-2.0);
            let fe = f(xe);
            if fe < fr {
                simplex[w] = xe;
                vals[w] = fe;
            } else {
                simplex[w] = xr;
                vals[w] = fr;
            }
        } else if fr < vals[m] {
            simplex[w] = xr;
            vals[w] = fr;
        } else {
            let xc = if fr < vals[w] { along(-0.5) } else { along(0.5) };
            let fc = f(xc);
            if fc < vals[w].min(fr) {
                simplex[w] = xc;
                vals[w] = fc;
            } else {
                for k in [m, w] {
                    simplex[k] = [
                        (simplex[k][0] + simplex[b][0]) / 2.0,
                        (simplex[k][1] + simplex[b][1]) / 2.0,
                    ];
                    vals[k] = f(simplex[k]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    (simplex[best], vals[best])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_validate() {
        assert!(LambdaWeights::new(0.2, 0.3, 0.5).is_ok());
        assert!(LambdaWeights::new(0.2, 0.3, 0.6).is_err());
        assert!(LambdaWeights::new(-0.1, 0.6, 0.5).is_err());
        let n = LambdaWeights::normalized(2.0, 2.0, 4.0).unwrap();
        assert_eq!(n.as_array(), [0.25, 0.25, 0.5]);
        assert!(LambdaWeights::normalized(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn lattice_count() {
        assert_eq!(lattice(200).count(), lattice_len(200));
        assert_eq!(lattice_len(200), 20301);
    }

    #[test]
    fn refinement_reaches_interior_minimum() {
        let target = [0.137, 0.411];
        let f = |l: &LambdaWeights| (l.l1() - target[0]).powi(2) + (l.l2() - target[1]).powi(2);
        let (v, lw) = minimize_on_simplex(f, 20, None);
        assert!(v < 1e-10, "{v}");
        assert!((lw.l1() - target[0]).abs() < 1e-5);
    }

    #[test]
    fn ties_prefer_small_l3_then_l1() {
        let (_, lw) = minimize_on_simplex(|_| 1.0, 10, None);
        assert_eq!(lw.as_array(), [0.0, 1.0, 0.0]);
    }
}
