#[path = "fixtures/shapiro_wilk.rs"]
mod fixtures;

use crra_core::stats::{normal_cdf, quantile, shapiro_wilk};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

#[test]
fn shapiro_wilk_matches_reference() {
    for f in fixtures::all() {
        let r = shapiro_wilk(&f.data).unwrap();
        assert!((r.statistic - f.w).abs() < 1e-6, "{}: W {} vs {}", f.name, r.statistic, f.w);
        assert!((r.p_value - f.p).abs() < 1e-4, "{}: p {} vs {}", f.name, r.p_value, f.p);
    }
}

fn rejection_rate<D: Distribution<f64>>(dist: D, n: usize, reps: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = vec![0.0; n];
    let mut hits = 0;
    for _ in 0..reps {
        for x in buf.iter_mut() {
            *x = dist.sample(&mut rng);
        }
        if shapiro_wilk(&buf).unwrap().p_value < 0.05 {
            hits += 1;
        }
    }
    hits as f64 / reps as f64
}

#[test]
fn size_under_null() {
    for (n, seed) in [(20, 1), (150, 2), (600, 3)] {
        let rate = rejection_rate(StandardNormal, n, 4000, seed);
        assert!((rate - 0.05).abs() < 0.015, "n = {n}: {rate}");
    }
}

#[test]
fn power_against_exponential() {
    assert!(rejection_rate(Exp1, 100, 500, 9) > 0.99);
}

#[test]
fn cdf_symmetric_and_monotone() {
    let mut prev = 0.0;
    for i in 0..100_000 {
        let x = -10.0 + 20.0 * i as f64 / 99_999.0;
        let f = normal_cdf(x);
        assert!(f >= prev);
        assert!((f + normal_cdf(-x) - 1.0).abs() < 1e-15);
        prev = f;
    }
}

proptest! {
    #[test]
    fn shapiro_wilk_location_scale(
        data in prop::collection::vec(-5.0f64..5.0, 3..80),
        a in -100.0f64..100.0,
        b in 0.01f64..100.0,
    ) {
        let spread = data.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - data.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(spread > 1e-3);
        let w0 = shapiro_wilk(&data).unwrap().statistic;
        let moved: Vec<f64> = data.iter().map(|x| a + b * x).collect();
        let w1 = shapiro_wilk(&moved).unwrap().statistic;
        prop_assert!((w0 - w1).abs() < 1e-12);
    }

    #[test]
    fn quantile_monotone_and_affine(
        data in prop::collection::vec(-1e3f64..1e3, 1..60),
        q1 in 0.0f64..=1.0,
        q2 in 0.0f64..=1.0,
        a in -10.0f64..10.0,
        b in 0.1f64..10.0,
    ) {
        let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
        prop_assert!(quantile(&data, lo).unwrap() <= quantile(&data, hi).unwrap());
        let moved: Vec<f64> = data.iter().map(|x| a + b * x).collect();
        let lhs = quantile(&moved, q1).unwrap();
        let rhs = a + b * quantile(&data, q1).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
    }
}
