use macfb::bounds::{
    d_l, d_l_deterministic, d_u, e_lower, e_upper, gamma_star, CapacitySurface, RatePair,
};
use macfb::channel::PtpChannel as GenericPtp;
use macfb::info::{d_i_max, kl_pair, mutual_infos, Objective};
use macfb::maxmin::{solve_maxmin, solve_minmax_dual_grid};
use macfb::sim::{quantize_type, ConfirmationCode, Pattern};
use macfb::{Channel, InputProduct, PayoffMatrix, PtpChannel};
use proptest::prelude::*;

fn normalize(v: &[f64]) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}

/// Random channel with alphabets up to 3; some entries forced to zero.
fn channel() -> impl Strategy<Value = Channel> {
    (1usize..=3, 1usize..=3, 2usize..=3, prop::collection::vec(0.0f64..1.0, 27), any::<u32>()).prop_map(
        |(nx1, nx2, ny, raw, zeros)| {
            let rows: Vec<Vec<f64>> = (0..nx1 * nx2)
                .map(|r| {
                    let mut row: Vec<f64> = (0..ny)
                        .map(|y| {
                            let k = r * ny + y;
                            if zeros >> (k % 32) & 7 == 0 {
                                0.0
                            } else {
                                raw[k] + 0.01
                            }
                        })
                        .collect();
                    if row.iter().all(|&v| v == 0.0) {
                        row[0] = 1.0;
                    }
                    normalize(&row)
                })
                .collect();
            Channel::new(nx1, nx2, ny, &rows).unwrap()
        },
    )
}

fn ptp() -> impl Strategy<Value = PtpChannel> {
    (2usize..=3, 2usize..=3, prop::collection::vec(0.01f64..1.0, 9)).prop_map(|(nx, ny, raw)| {
        let rows: Vec<Vec<f64>> = (0..nx).map(|x| normalize(&raw[x * ny..x * ny + ny])).collect();
        GenericPtp::new(&rows).unwrap()
    })
}

fn payoff(rows: usize) -> impl Strategy<Value = PayoffMatrix> {
    (1usize..=81).prop_flat_map(move |cols| {
        prop::collection::vec(0.0f64..5.0, rows * cols)
            .prop_map(move |v| PayoffMatrix::new(rows, cols, v).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kl_is_nonnegative_and_vanishes_on_equal_inputs(ch in channel()) {
        for x1 in 0..ch.nx1() {
            for x2 in 0..ch.nx2() {
                prop_assert_eq!(kl_pair(&ch, (x1, x2), (x1, x2)), 0.0);
                for z1 in 0..ch.nx1() {
                    for z2 in 0..ch.nx2() {
                        prop_assert!(kl_pair(&ch, (x1, x2), (z1, z2)) >= 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn single_user_divergences_are_dominated(ch in channel()) {
        let d3 = d_i_max(&ch, Objective::Both);
        prop_assert!(d_i_max(&ch, Objective::User1) <= d3);
        prop_assert!(d_i_max(&ch, Objective::User2) <= d3);
    }

    #[test]
    fn additive_closed_form(m in 2usize..=6, frac in 0.01f64..0.99) {
        let p = frac / m as f64;
        let ch = Channel::additive_mod_m(m, p).unwrap();
        let want = (1.0 - m as f64 * p) * ((1.0 - (m as f64 - 1.0) * p) / p).log2();
        for obj in Objective::ALL {
            prop_assert!((d_i_max(&ch, obj) - want).abs() <= 1e-9 * want.max(1.0));
        }
    }

    #[test]
    fn mutual_information_bounds(ch in channel(), a in prop::collection::vec(0.01f64..1.0, 3), b in prop::collection::vec(0.01f64..1.0, 3)) {
        let inputs = InputProduct::new(&ch, normalize(&a[..ch.nx1()]), normalize(&b[..ch.nx2()])).unwrap();
        let mi = mutual_infos(&ch, &inputs);
        let tol = 1e-12;
        prop_assert!(mi.i1 >= -tol && mi.i2 >= -tol && mi.i3 >= -tol);
        prop_assert!(mi.i1 <= (ch.nx1() as f64).log2() + tol);
        prop_assert!(mi.i2 <= (ch.nx2() as f64).log2() + tol);
        prop_assert!(mi.i3 <= (ch.ny() as f64).log2() + tol);
    }

    #[test]
    fn product_channels_decompose(q1 in ptp(), q2 in ptp()) {
        let ch = Channel::product(&q1, &q2);
        let p1 = vec![1.0 / q1.nx() as f64; q1.nx()];
        let p2 = vec![1.0 / q2.nx() as f64; q2.nx()];
        let mi = mutual_infos(&ch, &InputProduct::new(&ch, p1.clone(), p2.clone()).unwrap());
        let (c1, c2) = (q1.mutual_information(&p1), q2.mutual_information(&p2));
        prop_assert!((mi.i1 - c1).abs() < 1e-9);
        prop_assert!((mi.i2 - c2).abs() < 1e-9);
        prop_assert!((mi.i3 - c1 - c2).abs() < 1e-9);
    }

    #[test]
    fn lp_scaling_and_column_permutation(a in payoff(3), c in 0.1f64..10.0, shift in 0usize..81) {
        let v = solve_maxmin(&a, 1e-9).unwrap();
        let scaled = solve_maxmin(&a.scaled(c), 1e-9).unwrap();
        prop_assert!((scaled.value - c * v.value).abs() <= 1e-7 * (1.0 + c * v.value));
        let cols = a.cols();
        let permuted: Vec<f64> = (0..3)
            .flat_map(|i| (0..cols).map(move |q| (i, (q + shift) % cols)))
            .map(|(i, q)| a.get(i, q))
            .collect();
        let p = solve_maxmin(&PayoffMatrix::new(3, cols, permuted).unwrap(), 1e-9).unwrap();
        prop_assert!((p.value - v.value).abs() <= 1e-7);
        let support = v.distribution.iter().filter(|&&w| w > 1e-10).count();
        prop_assert!(support <= 4);
        let total: f64 = v.distribution.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn constants_are_ordered(ch in channel()) {
        let (dl, _) = d_l(&ch).unwrap();
        let (det, _) = d_l_deterministic(&ch);
        prop_assert!(det <= dl + 1e-9);
        prop_assert!(dl <= d_u(&ch) + 1e-9 || d_u(&ch).is_infinite());
    }

    #[test]
    fn gamma_star_along_rays(q1 in ptp(), q2 in ptp(), t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
        let surface = CapacitySurface::product_of(&q1, &q2);
        let (c1, c2) = (q1.capacity().0, q2.capacity().0);
        let r = RatePair::new(t1 * c1, t2 * c2).unwrap();
        let g = gamma_star(&surface, r).value;
        let mut prev = f64::INFINITY;
        for alpha in [0.25, 0.5, 0.75, 1.0] {
            let ga = gamma_star(&surface, r.scaled(alpha).unwrap()).value;
            prop_assert!((ga - (1.0 - alpha * (1.0 - g))).abs() <= 1e-6);
            prop_assert!(ga <= prev + 1e-12);
            prev = ga;
        }
    }

    #[test]
    fn type_quantization_is_largest_remainder(raw in prop::collection::vec(0.0f64..1.0, 1..20), len in 0usize..200) {
        prop_assume!(raw.iter().sum::<f64>() > 0.0);
        let w = normalize(&raw);
        let counts = quantize_type(&w, len);
        prop_assert_eq!(counts.iter().sum::<usize>(), len);
        for (c, x) in counts.iter().zip(&w) {
            prop_assert!((*c as f64 - len as f64 * x).abs() < 1.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn lp_matches_dual_grid(a in payoff(3)) {
        let v = solve_maxmin(&a, 1e-9).unwrap().value;
        let g = solve_minmax_dual_grid(&a, 2000);
        prop_assert!(g >= v - 1e-9);
        prop_assert!((g - v).abs() <= 2e-3);
    }

    #[test]
    fn lower_exponent_below_upper(ch in channel(), t1 in 0.0f64..0.5, t2 in 0.0f64..0.5) {
        let surface = CapacitySurface::for_channel(&ch);
        let r = RatePair::new(t1, t2).unwrap();
        if gamma_star(&surface, r).value > 1e-9 {
            let (el, eu) = (e_lower(&ch, &surface, r).unwrap(), e_upper(&ch, &surface, r).unwrap());
            prop_assert!(el >= 0.0);
            prop_assert!(el <= eu + 1e-9 || eu.is_infinite());
        }
    }

    #[test]
    fn every_pattern_sees_the_same_type(cols in prop::collection::vec((0usize..3, 0usize..3, 0usize..3, 0usize..3), 1..12)) {
        let ch = Channel::additive_mod_m(3, 0.1).unwrap();
        let quads: Vec<_> = cols.iter().map(|&(a, b, c, d)| macfb::info::Quad::new(a, b, c, d)).collect();
        let code = ConfirmationCode::from_columns(&ch, quads.clone()).unwrap();
        for p in Pattern::ALL {
            let (h1, h2) = p.bits();
            let (w1, w2) = (code.codeword1(usize::from(h1)), code.codeword2(usize::from(h2)));
            let mut sent: Vec<(usize, usize)> = w1.into_iter().zip(w2).collect();
            let mut want: Vec<(usize, usize)> = quads.iter().map(|&q| p.inputs(q)).collect();
            sent.sort_unstable();
            want.sort_unstable();
            prop_assert_eq!(sent, want);
        }
    }
}
