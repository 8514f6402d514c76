//! Zero-rate constants, capacity-region geometry and the resulting exponent bounds.
//!
//! All quantities are in bits. The exponent bounds share one structure: a
//! zero-rate constant (`D_l` or `D_u`) times the normalized distance `gamma*`
//! of the rate pair to the region boundary, where the distance is measured
//! through the weighted-sum capacities `C_lambda` of a [`CapacitySurface`].

mod directed;
mod lambda;
mod region;
mod surface;

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

use crate::channel::{ChannelError, PtpChannel};
use crate::info::{d_i_max, d_pointwise, DistributionError, Objective, Quad, QuadDistribution};
use crate::maxmin::{solve_maxmin, LpError, PayoffMatrix, DEFAULT_TOL};
use crate::Channel;

pub use directed::{
    directed_info, CausalPolicy, ConstantPolicy, DirectedInfoTriple, MemorylessPolicy,
    DIRECTED_INFO_BUDGET,
};
pub use lambda::LambdaWeights;
pub use region::{c_of_theta, region_polygon, RegionPolygon, DEFAULT_REGION_SAMPLES};
pub use surface::{
    c_lambda, CLambdaEstimate, CLambdaOptions, CapacitySurface, Provenance,
    DEFAULT_GRID_RESOLUTION, SURROGATE_GRID_RESOLUTION,
};

pub(crate) use lambda::minimize_on_simplex;

/// `gamma*` at or below this counts as on or outside the boundary.
pub const REGION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error("capacity region has empty interior")]
    DegenerateRegion { vertices: Vec<(f64, f64)> },
    #[error("rate pair ({r1}, {r2}) is not strictly inside the capacity region (gamma* = {gamma_star})")]
    OutOfRegion { r1: f64, r2: f64, gamma_star: f64 },
    #[error("enumeration of {size} outcomes exceeds the budget of {budget}")]
    TooLarge { size: f64, budget: f64 },
    #[error("weights {0:?} are not a probability vector")]
    InvalidLambda([f64; 3]),
    #[error("invalid rate pair ({r1}, {r2})")]
    InvalidRate { r1: f64, r2: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// A rate pair `(R1, R2)`; the sum rate `R3 = R1 + R2` is derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePair {
    r1: f64,
    r2: f64,
}

impl RatePair {
    pub fn new(r1: f64, r2: f64) -> Result<Self, BoundsError> {
        if !(r1 >= 0.0 && r2 >= 0.0 && r1.is_finite() && r2.is_finite()) {
            return Err(BoundsError::InvalidRate { r1, r2 });
        }
        Ok(Self { r1, r2 })
    }

    pub fn from_polar(norm: f64, theta: f64) -> Result<Self, BoundsError> {
        Self::new(norm * theta.cos(), norm * theta.sin())
    }

    pub fn zero() -> Self {
        Self { r1: 0.0, r2: 0.0 }
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }

    pub fn r3(&self) -> f64 {
        self.r1 + self.r2
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.r1, self.r2, self.r3()]
    }

    pub fn norm(&self) -> f64 {
        self.r1.hypot(self.r2)
    }

    /// Angle from the `R1` axis in `[0, pi/2]`; zero at the origin.
    pub fn theta(&self) -> f64 {
        if self.norm() == 0.0 {
            0.0
        } else {
            self.r2.atan2(self.r1).clamp(0.0, FRAC_PI_2)
        }
    }

    pub fn scaled(&self, a: f64) -> Result<Self, BoundsError> {
        Self::new(a * self.r1, a * self.r2)
    }
}

/// `x / c` with `0/0 = 0` and `x/0 = inf` for `x > 0`.
fn ratio(x: f64, c: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if c <= 0.0 {
        f64::INFINITY
    } else {
        x / c
    }
}

/// `d * f` treating `inf * 0` as `0`.
fn scale_constant(d: f64, f: f64) -> f64 {
    if f == 0.0 {
        0.0
    } else {
        d * f
    }
}

/// `D_u = max(D_1, D_2, D_3)`; may be `+inf`.
pub fn d_u(ch: &Channel) -> f64 {
    Objective::ALL
        .iter()
        .map(|&o| d_i_max(ch, o))
        .fold(0.0, f64::max)
}

/// The `3 x |quads|` payoff `A[i][q] = D_i(q)`.
pub fn divergence_payoff(ch: &Channel) -> PayoffMatrix<f64> {
    let rows: Vec<Vec<f64>> = Objective::ALL
        .iter()
        .map(|&o| Quad::all(ch).map(|q| d_pointwise(ch, o, q)).collect())
        .collect();
    PayoffMatrix::from_rows(&rows).expect("payoff has at least one column")
}

/// `D_l = sup_P min_i E_P[D_i]` over laws on quadruples, with a maximizer.
pub fn d_l(ch: &Channel) -> Result<(f64, QuadDistribution<f64>), BoundsError> {
    let sol = solve_maxmin(&divergence_payoff(ch), DEFAULT_TOL)?;
    let dist = QuadDistribution::new(ch, sol.distribution)?;
    Ok((sol.value, dist))
}

/// `D_l` restricted to point masses: `max_q min_i D_i(q)`.
pub fn d_l_deterministic(ch: &Channel) -> (f64, Quad) {
    Quad::all(ch)
        .map(|q| {
            let v = Objective::ALL
                .iter()
                .map(|&o| d_pointwise(ch, o, q))
                .fold(f64::INFINITY, f64::min);
            (v, q)
        })
        .fold((f64::NEG_INFINITY, Quad::new(0, 0, 0, 0)), |best, c| {
            if c.0 > best.0 {
                c
            } else {
                best
            }
        })
}

/// `gamma* = min_lambda (1 - lambda . R / C_lambda)` and its minimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaStar {
    pub value: f64,
    pub lambda: LambdaWeights,
}

impl GammaStar {
    /// Strictly inside the region (boundary excluded).
    pub fn in_region(&self) -> bool {
        self.value > REGION_TOL
    }
}

fn gamma_objective(surface: &CapacitySurface, rate: &RatePair, l: &LambdaWeights) -> f64 {
    gamma_from(rate, l, surface.eval(l))
}

fn gamma_from(rate: &RatePair, l: &LambdaWeights, c: f64) -> f64 {
    let num: f64 = l.as_array().iter().zip(rate.as_array()).map(|(a, b)| a * b).sum();
    1.0 - ratio(num, c)
}

/// Nonpositive values flag rate pairs on or outside the region.
pub fn gamma_star(surface: &CapacitySurface, rate: RatePair) -> GammaStar {
    let grid: Vec<f64> = {
        let res = surface.resolution();
        surface
            .grid()
            .iter()
            .zip(lambda::lattice(res))
            .map(|(&c, (i, j))| gamma_from(&rate, &LambdaWeights::from_lattice(i, j, res), c))
            .collect()
    };
    let (value, lambda) = minimize_on_simplex(
        |l| gamma_objective(surface, &rate, l),
        surface.resolution(),
        Some(&grid),
    );
    GammaStar { value, lambda }
}

fn check_region(rate: RatePair, g: &GammaStar) -> Result<f64, BoundsError> {
    if g.value < -REGION_TOL {
        Err(BoundsError::OutOfRegion {
            r1: rate.r1(),
            r2: rate.r2(),
            gamma_star: g.value,
        })
    } else {
        Ok(g.value.max(0.0))
    }
}

/// `E_l = D_l gamma*`. Boundary pairs give 0; pairs outside give `OutOfRegion`.
pub fn e_lower(ch: &Channel, surface: &CapacitySurface, rate: RatePair) -> Result<f64, BoundsError> {
    let g = check_region(rate, &gamma_star(surface, rate))?;
    Ok(scale_constant(d_l(ch)?.0, g))
}

/// `E_u = D_u gamma*`; `+inf` when `D_u` is infinite and the pair is interior.
pub fn e_upper(ch: &Channel, surface: &CapacitySurface, rate: RatePair) -> Result<f64, BoundsError> {
    let g = check_region(rate, &gamma_star(surface, rate))?;
    Ok(scale_constant(d_u(ch), g))
}

/// `min_lambda min_j D_j (1 - lambda_j R_j / C_lambda)`, with the minimizing weights.
pub fn e_upper_per_j(
    ch: &Channel,
    surface: &CapacitySurface,
    rate: RatePair,
) -> Result<(f64, LambdaWeights), BoundsError> {
    let d = Objective::ALL.map(|o| d_i_max(ch, o));
    let r = rate.as_array();
    let (v, l) = minimize_on_simplex(
        |l| {
            let c = surface.eval(l);
            let w = l.as_array();
            (0..3)
                .map(|j| scale_constant(d[j], (1.0 - ratio(w[j] * r[j], c)).max(0.0)))
                .fold(f64::INFINITY, f64::min)
        },
        surface.resolution(),
        None,
    );
    check_region(rate, &gamma_star(surface, rate))?;
    Ok((v, l))
}

/// Two independent point-to-point feedback schemes run side by side:
/// `min(D_1 (1 - R1/C1), D_2 (1 - R2/C2))` with per-component constants.
pub fn parallel_lower(q1: &PtpChannel<f64>, q2: &PtpChannel<f64>, rate: RatePair) -> Result<f64, BoundsError> {
    let (c1, _) = q1.capacity();
    let (c2, _) = q2.capacity();
    if rate.r1() >= c1 || rate.r2() >= c2 {
        let g = (1.0 - ratio(rate.r1(), c1)).min(1.0 - ratio(rate.r2(), c2));
        return Err(BoundsError::OutOfRegion {
            r1: rate.r1(),
            r2: rate.r2(),
            gamma_star: g,
        });
    }
    let e1 = scale_constant(q1.max_row_divergence(), 1.0 - rate.r1() / c1);
    let e2 = scale_constant(q2.max_row_divergence(), 1.0 - rate.r2() / c2);
    Ok(e1.min(e2))
}

/// Single-user feedback exponent `(1 - R/C) C_1` through the MAC machinery,
/// for a channel whose second input alphabet has one letter.
pub fn burnashev_ptp(ch: &Channel, r: f64) -> Result<f64, BoundsError> {
    if ch.nx2() != 1 {
        return Err(BoundsError::DimensionMismatch(format!(
            "expected a single-letter second input, got {} letters",
            ch.nx2()
        )));
    }
    let surface = CapacitySurface::degenerate(ch).expect("second alphabet has one letter");
    e_upper(ch, &surface, RatePair::new(r, 0.0)?)
}

/// Headline bounds for one channel and rate pair.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub r1: f64,
    pub r2: f64,
    pub d_l: f64,
    pub d_u: f64,
    pub gamma_star: f64,
    pub e_lower: f64,
    pub e_upper: f64,
    pub e_upper_per_j: f64,
    pub argmin_lambda: LambdaWeights,
    pub optimizing_quad_dist: QuadDistribution<f64>,
    pub provenance: Provenance,
    pub in_region: bool,
}

impl BoundReport {
    /// `E_u` is only a converse when the surface is exact.
    pub fn upper_is_valid_converse(&self) -> bool {
        self.provenance == Provenance::ExactClosedForm
    }

    /// Flat `key=value` fields in a fixed order.
    pub fn record(&self) -> Vec<(&'static str, String)> {
        let l = self.argmin_lambda.as_array();
        vec![
            ("r1", fmt_num(self.r1)),
            ("r2", fmt_num(self.r2)),
            ("d_l", fmt_num(self.d_l)),
            ("d_u", fmt_num(self.d_u)),
            ("gamma_star", fmt_num(self.gamma_star)),
            ("e_lower", fmt_num(self.e_lower)),
            ("e_upper", fmt_num(self.e_upper)),
            ("e_upper_per_j", fmt_num(self.e_upper_per_j)),
            ("lambda1", fmt_num(l[0])),
            ("lambda2", fmt_num(l[1])),
            ("lambda3", fmt_num(l[2])),
            ("surface", self.provenance.to_string()),
            ("upper_valid_converse", self.upper_is_valid_converse().to_string()),
            ("in_region", self.in_region.to_string()),
            ("slack_terms", "dropped".to_string()),
        ]
    }

    pub fn to_record_string(&self) -> String {
        self.record()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}

/// Shortest round-trip decimal, scientific outside `[1e-4, 1e15)`; `inf` for
/// infinities.
pub fn fmt_num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else if x != 0.0 && !(1e-4..1e15).contains(&x.abs()) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Computes every bound for `rate`. Pairs outside the region are reported with
/// `in_region = false` and zero exponents rather than as an error.
pub fn compute_bounds(ch: &Channel, surface: &CapacitySurface, rate: RatePair) -> Result<BoundReport, BoundsError> {
    let (dl, dist) = d_l(ch)?;
    let du = d_u(ch);
    let g = gamma_star(surface, rate);
    let gv = g.value.max(0.0);
    let (per_j, _) = match e_upper_per_j(ch, surface, rate) {
        Ok(v) => v,
        Err(BoundsError::OutOfRegion { .. }) => (0.0, g.lambda),
        Err(e) => return Err(e),
    };
    Ok(BoundReport {
        r1: rate.r1(),
        r2: rate.r2(),
        d_l: dl,
        d_u: du,
        gamma_star: g.value,
        e_lower: scale_constant(dl, gv),
        e_upper: scale_constant(du, gv),
        e_upper_per_j: per_j,
        argmin_lambda: g.lambda,
        optimizing_quad_dist: dist,
        provenance: surface.provenance(),
        in_region: g.in_region(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::binary_entropy;

    fn closed(m: usize, p: f64) -> f64 {
        (1.0 - m as f64 * p) * ((1.0 - (m as f64 - 1.0) * p) / p).log2()
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.25), "0.25");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(3.5e-17), "3.5e-17");
        assert_eq!(fmt_num(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt_num("1e-5".parse().unwrap()).parse::<f64>().unwrap(), 1e-5);
    }

    #[test]
    fn additive_constants() {
        let ch = Channel::additive_mod_m(3, 0.1).unwrap();
        assert!((d_u(&ch) - 2.1).abs() < 1e-12);
        let (dl, dist) = d_l(&ch).unwrap();
        assert!((dl - closed(3, 0.1)).abs() < 1e-6, "{dl}");
        for o in Objective::ALL {
            assert!(dist.expected_divergence(&ch, o) >= dl - 1e-8);
        }
        assert!((d_l_deterministic(&ch).0 - 2.1).abs() < 1e-12);
    }

    #[test]
    fn flat_channel_constants_vanish() {
        let ch = Channel::additive_mod_m(3, 1.0 / 3.0).unwrap();
        assert!(d_u(&ch) < 1e-12);
        assert!(d_l(&ch).unwrap().0.abs() < 1e-12);
    }

    #[test]
    fn gamma_star_additive() {
        let s = CapacitySurface::additive(3, 0.1).unwrap();
        let g = gamma_star(&s, RatePair::new(0.2, 0.2).unwrap());
        let c = 3f64.log2() - crate::scalar::entropy_bits(&[0.8, 0.1, 0.1]);
        assert!((g.value - (1.0 - 0.4 / c)).abs() < 1e-9);
        assert!((g.value - 0.3967).abs() < 1e-4);
        assert_eq!(g.lambda.as_array(), [0.0, 0.0, 1.0]);
        assert!((gamma_star(&s, RatePair::zero()).value - 1.0).abs() < 1e-12);
        let edge = gamma_star(&s, RatePair::new(c / 2.0, c / 2.0).unwrap());
        assert!(edge.value.abs() < 1e-6);
        assert!(!edge.in_region());
    }

    #[test]
    fn exponents_additive() {
        let ch = Channel::additive_mod_m(3, 0.1).unwrap();
        let s = CapacitySurface::additive(3, 0.1).unwrap();
        let r = RatePair::new(0.2, 0.2).unwrap();
        let el = e_lower(&ch, &s, r).unwrap();
        let eu = e_upper(&ch, &s, r).unwrap();
        assert!((el - 0.8331).abs() < 1e-4, "{el}");
        assert!((el - eu).abs() < 1e-6);
        assert!((e_lower(&ch, &s, RatePair::zero()).unwrap() - 2.1).abs() < 1e-6);
        assert!(matches!(
            e_lower(&ch, &s, RatePair::new(0.5, 0.5).unwrap()),
            Err(BoundsError::OutOfRegion { .. })
        ));
    }

    #[test]
    fn ptp_reduction() {
        let bsc = PtpChannel::bsc(0.1f64).unwrap();
        let c: f64 = 1.0 - binary_entropy(0.1);
        let c1 = 0.8 * 9f64.log2();
        let want = (1.0 - 0.25 / c) * c1;
        assert!((want - 1.3421).abs() < 1e-4);
        let got = burnashev_ptp(&bsc.as_mac(), 0.25).unwrap();
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        assert!((burnashev_ptp(&bsc.as_mac(), 0.0).unwrap() - c1).abs() < 1e-9);
        assert!(burnashev_ptp(&bsc.as_mac(), c).unwrap().abs() < 1e-6);
    }

    #[test]
    fn parallel_two_bscs() {
        let bsc = PtpChannel::bsc(0.1f64).unwrap();
        let v = parallel_lower(&bsc, &bsc, RatePair::new(0.2, 0.4).unwrap()).unwrap();
        let c: f64 = 1.0 - binary_entropy(0.1);
        let d = 0.8 * 9f64.log2();
        assert!((v - d * (1.0 - 0.4 / c)).abs() < 1e-9, "{v}");
        assert!((v - 0.6256).abs() < 1e-4);
        assert!(parallel_lower(&bsc, &bsc, RatePair::new(0.6, 0.1).unwrap()).is_err());
    }

    #[test]
    fn per_j_upper_for_product() {
        let bsc = PtpChannel::bsc(0.1f64).unwrap();
        let ch = Channel::product(&bsc, &bsc);
        let s = CapacitySurface::product_of(&bsc, &bsc);
        let r = RatePair::new(0.2, 0.4).unwrap();
        let (v, _) = e_upper_per_j(&ch, &s, r).unwrap();
        let c: f64 = 1.0 - binary_entropy(0.1);
        let d = Objective::ALL.map(|o| d_i_max(&ch, o));
        let sub = (d[0] * (1.0 - 0.2 / c)).min(d[1] * (1.0 - 0.4 / c));
        assert!(v <= sub + 1e-9);
    }

    #[test]
    fn report_record_order() {
        let ch = Channel::additive_mod_m(3, 0.1).unwrap();
        let s = CapacitySurface::additive(3, 0.1).unwrap();
        let rep = compute_bounds(&ch, &s, RatePair::new(0.2, 0.2).unwrap()).unwrap();
        let keys: Vec<_> = rep.record().into_iter().map(|(k, _)| k).collect();
        assert_eq!(keys[..4], ["r1", "r2", "d_l", "d_u"]);
        assert!(rep.in_region && rep.upper_is_valid_converse());
        assert!(rep.to_record_string().contains("surface=exact-closed-form\n"));
    }
}
