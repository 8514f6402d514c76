//! Exponent predictions from the realized confirmation type.

use crate::bounds::fmt_num;
use crate::info::QuadDistribution;
use crate::sim::confirmation::{dbar, ConfirmationCode, Pattern};
use crate::Channel;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticPrediction {
    pub len: usize,
    /// `Dbar(00 || a)` for `a = 01, 10, 11`.
    pub dbar_from_00: [f64; 3],
    /// `Dbar(a || 00)`.
    pub dbar_to_00: [f64; 3],
    /// `min_a Dbar(00 || a)`: the miss exponent of a KL-threshold test.
    pub d_l_n: f64,
    /// `min_a Dbar(a || 00)`.
    pub d_tilde_l_n: f64,
    /// `3 * 2^(-len d_l_n)`.
    pub p_eb_bound: f64,
    /// `3 * 2^(-len d_tilde_l_n) + zeta`.
    pub q_bound: f64,
    /// Per-symbol Chernoff information between 00 and each alternative.
    pub chernoff: [f64; 3],
}

impl AnalyticPrediction {
    pub fn record(&self) -> Vec<(&'static str, String)> {
        vec![
            ("len", self.len.to_string()),
            ("d_l_n", fmt_num(self.d_l_n)),
            ("d_tilde_l_n", fmt_num(self.d_tilde_l_n)),
            ("p_eb_bound", fmt_num(self.p_eb_bound)),
            ("q_bound", fmt_num(self.q_bound)),
            ("chernoff_01", fmt_num(self.chernoff[0])),
            ("chernoff_10", fmt_num(self.chernoff[1])),
            ("chernoff_11", fmt_num(self.chernoff[2])),
        ]
    }
}

/// `-sum_q P(q) log2 sum_y P00^(1-s) Pa^s` at one `s`.
fn chernoff_at(ch: &Channel, ty: &QuadDistribution<f64>, a: Pattern, s: f64) -> f64 {
    let mut acc = 0.0;
    for (q, w) in ty.support(ch) {
        let (p, r) = (Pattern::P00.inputs(q), a.inputs(q));
        let z: f64 = ch
            .row(p.0, p.1)
            .iter()
            .zip(ch.row(r.0, r.1))
            .map(|(&u, &v)| if u > 1e-300 && v > 1e-300 { u.powf(1.0 - s) * v.powf(s) } else { 0.0 })
            .sum();
        if z <= 0.0 {
            return f64::INFINITY;
        }
        acc -= w * z.log2();
    }
    acc
}

/// `max_{s in [0,1]}` of the concave Chernoff function, by golden-section search.
pub fn chernoff_information(ch: &Channel, ty: &QuadDistribution<f64>, a: Pattern) -> f64 {
    let f = |s: f64| chernoff_at(ch, ty, a, s);
    if f(0.5).is_infinite() {
        return f64::INFINITY;
    }
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..100 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    f1.max(f2).max(0.0)
}

/// Predictions for a built code; `zeta` is the data-stage error probability.
pub fn analytic_predictor(ch: &Channel, code: &ConfirmationCode, zeta: f64) -> AnalyticPrediction {
    let ty = code.realized_type(ch);
    let len = code.len();
    let from = Pattern::ALTERNATIVES.map(|a| dbar(ch, &ty, Pattern::P00, a));
    let to = Pattern::ALTERNATIVES.map(|a| dbar(ch, &ty, a, Pattern::P00));
    let d_l_n = from.iter().copied().fold(f64::INFINITY, f64::min);
    let d_tilde_l_n = to.iter().copied().fold(f64::INFINITY, f64::min);
    let bound = |d: f64| (3.0 * (-(len as f64) * d).exp2()).min(3.0);
    AnalyticPrediction {
        len,
        dbar_from_00: from,
        dbar_to_00: to,
        d_l_n,
        d_tilde_l_n,
        p_eb_bound: bound(d_l_n),
        q_bound: bound(d_tilde_l_n) + zeta,
        chernoff: Pattern::ALTERNATIVES.map(|a| chernoff_information(ch, &ty, a)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::Quad;

    #[test]
    fn point_mass_on_additive() {
        let ch = Channel::additive_mod_m(3, 0.1).unwrap();
        let code = ConfirmationCode::from_columns(&ch, vec![Quad::new(0, 0, 1, 1); 10]).unwrap();
        let p = analytic_predictor(&ch, &code, 0.01);
        assert!((p.d_l_n - 2.1).abs() < 1e-12);
        assert!(p.p_eb_bound > 0.0 && p.p_eb_bound <= 3.0);
        // Symmetric pair of rows: the Chernoff optimum sits at s = 1/2,
        // -log2(2 sqrt(0.8 * 0.1) + 0.1).
        let want = -(2.0 * 0.08f64.sqrt() + 0.1).log2();
        for c in p.chernoff {
            assert!((c - want).abs() < 1e-9, "{c}");
            assert!(c <= p.d_l_n);
        }
    }

    #[test]
    fn chernoff_of_identical_rows_is_zero() {
        let ch = Channel::additive_mod_m(3, 1.0 / 3.0).unwrap();
        let code = ConfirmationCode::from_columns(&ch, vec![Quad::new(0, 0, 1, 1)]).unwrap();
        let p = analytic_predictor(&ch, &code, 0.0);
        assert!(p.chernoff.iter().all(|&c| c.abs() < 1e-12));
    }
}
