//! The rate region as an intersection of sampled supporting half-planes.

use crate::bounds::lambda::{lattice, lattice_len, LambdaWeights};
use crate::bounds::{BoundsError, CapacitySurface, RatePair};

pub const DEFAULT_REGION_SAMPLES: usize = 512;

const DEDUP_TOL: f64 = 1e-9;
const INSIDE_TOL: f64 = 1e-12;

/// Convex polygon in the nonnegative quadrant, counterclockwise from the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionPolygon {
    vertices: Vec<(f64, f64)>,
}

impl RegionPolygon {
    /// Validates convexity, orientation and that the origin is a vertex.
    pub fn from_vertices(vertices: Vec<(f64, f64)>) -> Result<Self, BoundsError> {
        let poly = Self { vertices };
        if poly.area() <= 1e-15 {
            return Err(BoundsError::DegenerateRegion {
                vertices: poly.vertices,
            });
        }
        let n = poly.vertices.len();
        for k in 0..n {
            let (a, b, c) = (poly.vertices[k], poly.vertices[(k + 1) % n], poly.vertices[(k + 2) % n]);
            if cross(a, b, c) < -1e-12 {
                return Err(BoundsError::DimensionMismatch("polygon is not convex and counterclockwise".into()));
            }
        }
        Ok(poly)
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        if n < 3 {
            return 0.0;
        }
        let mut s = 0.0;
        for k in 0..n {
            let (a, b) = (self.vertices[k], self.vertices[(k + 1) % n]);
            s += a.0 * b.1 - b.0 * a.1;
        }
        s / 2.0
    }

    /// Closed membership test (boundary included, up to `1e-9`).
    pub fn contains(&self, r: RatePair) -> bool {
        let p = (r.r1(), r.r2());
        let n = self.vertices.len();
        (0..n).all(|k| cross(self.vertices[k], self.vertices[(k + 1) % n], p) >= -1e-9)
    }

    /// Largest `t` with `t (cos theta, sin theta)` inside the polygon.
    pub fn ray_extent(&self, theta: f64) -> f64 {
        let d = (theta.cos(), theta.sin());
        let n = self.vertices.len();
        let mut t = f64::INFINITY;
        for k in 0..n {
            let (a, b) = (self.vertices[k], self.vertices[(k + 1) % n]);
            // Outward normal of a CCW edge.
            let nrm = (b.1 - a.1, a.0 - b.0);
            let len = nrm.0.hypot(nrm.1);
            if len == 0.0 {
                continue;
            }
            let along = (nrm.0 * d.0 + nrm.1 * d.1) / len;
            if along > 1e-15 {
                let offset = (nrm.0 * a.0 + nrm.1 * a.1) / len;
                t = t.min(offset / along);
            }
        }
        t.max(0.0)
    }
}

fn cross(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

/// Keeps the part of `poly` with `a x + b y <= c`.
fn clip(poly: &[(f64, f64)], a: f64, b: f64, c: f64) -> Vec<(f64, f64)> {
    let inside = |p: (f64, f64)| a * p.0 + b * p.1 <= c + INSIDE_TOL;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for k in 0..poly.len() {
        let cur = poly[k];
        let prev = poly[(k + poly.len() - 1) % poly.len()];
        let (ci, pi) = (inside(cur), inside(prev));
        if ci != pi {
            let fp = a * prev.0 + b * prev.1 - c;
            let fc = a * cur.0 + b * cur.1 - c;
            let t = fp / (fp - fc);
            out.push((prev.0 + t * (cur.0 - prev.0), prev.1 + t * (cur.1 - prev.1)));
        }
        if ci {
            out.push(cur);
        }
    }
    out
}

fn tidy(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let close = |p: (f64, f64), q: (f64, f64)| (p.0 - q.0).abs() <= DEDUP_TOL && (p.1 - q.1).abs() <= DEDUP_TOL;
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for p in v.drain(..) {
        if out.last().is_none_or(|&q| !close(p, q)) {
            out.push(p);
        }
    }
    while out.len() > 1 && close(out[0], *out.last().unwrap()) {
        out.pop();
    }
    // Drop collinear middle points.
    let mut changed = true;
    while changed && out.len() >= 3 {
        changed = false;
        let n = out.len();
        for k in 0..n {
            let (a, b, c) = (out[(k + n - 1) % n], out[k], out[(k + 1) % n]);
            let scale = ((c.0 - a.0).hypot(c.1 - a.1)).max(1e-300);
            if cross(a, b, c).abs() / scale <= DEDUP_TOL {
                out.remove(k);
                changed = true;
                break;
            }
        }
    }
    out
}

/// Intersects `(l1+l3) R1 + (l2+l3) R2 <= C_lambda` over at least `n_samples`
/// lattice weights with the box `[0, C_(1,0,0)] x [0, C_(0,1,0)]`.
pub fn region_polygon(surface: &CapacitySurface, n_samples: usize) -> Result<RegionPolygon, BoundsError> {
    let n_samples = n_samples.max(3);
    let mut res = 1;
    while lattice_len(res) < n_samples {
        res += 1;
    }
    let c1 = surface.eval(&LambdaWeights::new(1.0, 0.0, 0.0)?);
    let c2 = surface.eval(&LambdaWeights::new(0.0, 1.0, 0.0)?);
    let mut poly = vec![(0.0, 0.0), (c1, 0.0), (c1, c2), (0.0, c2)];
    for (i, j) in lattice(res) {
        let l = LambdaWeights::from_lattice(i, j, res);
        let (a, b) = l.rate_normal();
        poly = clip(&poly, a, b, surface.eval(&l));
        if poly.is_empty() {
            break;
        }
    }
    let mut v = tidy(poly);
    // Rotate so the origin comes first.
    if let Some(k) = v.iter().position(|p| p.0.abs() <= DEDUP_TOL && p.1.abs() <= DEDUP_TOL) {
        v.rotate_left(k);
        v[0] = (0.0, 0.0);
    }
    if v.len() < 3 {
        return Err(BoundsError::DegenerateRegion {
            vertices: vec![(0.0, 0.0)],
        });
    }
    RegionPolygon::from_vertices(v).map_err(|_| BoundsError::DegenerateRegion {
        vertices: vec![(0.0, 0.0)],
    })
}

/// Distance from the origin to the boundary along direction `theta`.
pub fn c_of_theta(region: &RegionPolygon, theta: f64) -> Result<f64, BoundsError> {
    if region.area() <= 1e-15 {
        return Err(BoundsError::DegenerateRegion {
            vertices: region.vertices.clone(),
        });
    }
    Ok(region.ray_extent(theta.clamp(0.0, std::f64::consts::FRAC_PI_2)))
}
