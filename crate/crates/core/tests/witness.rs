//! Mixed quadruple laws can beat every point mass.

use macfb::bounds::{d_l, d_l_deterministic};
use macfb::channel_file::parse_channel;
use macfb::Channel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FIXTURE: &str = include_str!("fixtures/witness_2x2x2.json");

#[test]
fn recorded_witness_separates_randomized_from_deterministic() {
    let ch = parse_channel(FIXTURE).unwrap().channel;
    assert_eq!((ch.nx1(), ch.nx2(), ch.ny()), (2, 2, 2));
    let (mixed, dist) = d_l(&ch).unwrap();
    let (det, _) = d_l_deterministic(&ch);
    assert!(det < mixed - 1e-3, "deterministic {det} vs randomized {mixed}");
    assert!(dist.weights().iter().filter(|&&w| w > 0.0).count() >= 2);
}

fn random_2x2x2(rng: &mut ChaCha8Rng) -> Channel {
    let rows: Vec<Vec<f64>> = (0..4)
        .map(|_| {
            let a: f64 = rng.gen_range(0.02..0.98);
            vec![a, 1.0 - a]
        })
        .collect();
    Channel::new(2, 2, 2, &rows).unwrap()
}

/// Regenerates the fixture: `cargo test --test witness -- --ignored --nocapture`.
#[test]
#[ignore]
fn search_for_witness() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for i in 0..100_000 {
        let ch = random_2x2x2(&mut rng);
        let (mixed, _) = d_l(&ch).unwrap();
        let (det, _) = d_l_deterministic(&ch);
        if det < mixed - 1e-3 {
            println!("draw {i}: gap {}", mixed - det);
            println!("{:?}", ch.to_nested());
            return;
        }
    }
    panic!("no witness found");
}
