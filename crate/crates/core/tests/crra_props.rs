use crra_core::crra::{
    discriminant, gamma_min, is_mv_efficient_power, log_solution, objective_value, power_solution,
    second_moment,
};
use crra_core::frontier::{efficient_constants, markowitz_weights, FrontierConstants, Weights};
use crra_core::linalg::Matrix;
use crra_core::market::{random_market, MarketParams};
use crra_core::oracle::random_feasible;
use crra_core::Error;
use proptest::prelude::*;

/// Markowitz portfolio at the larger root, last weight closing the budget;
/// its leverage is too large for the budget to hold to 1e-10 otherwise.
fn upper_root_weights(g: f64, c: &FrontierConstants<f64>) -> Weights<f64> {
    let (r, s) = (c.r_gmv(), c.s());
    let x = ((g + 2.0) * r + discriminant(g, c).sqrt()) / (2.0 * (1.0 + s));
    let t = (x - r) / s;
    let k = c.k();
    let mut w: Vec<f64> = (0..k - 1)
        .map(|i| c.inv_sigma_one()[i] * c.v_gmv() + t * c.q_mu()[i])
        .collect();
    w.push(1.0 - w.iter().sum::<f64>());
    Weights::new(w).unwrap()
}

/// Two assets with efficient-set constants `(r, v, s)`.
fn market_with(r: f64, v: f64, s: f64) -> MarketParams<f64> {
    let h = (s * v).sqrt();
    MarketParams::new(vec![r + h, r - h], Matrix::diagonal(&[2.0 * v, 2.0 * v])).unwrap()
}

#[test]
fn lower_root_beats_upper_root() {
    for seed in 0..100u64 {
        let p = random_market(2 + seed as usize % 7, seed).unwrap();
        let c = efficient_constants(&p);
        let gmin = gamma_min(&c).unwrap();
        for g in [gmin * (1.0 + 1e-6), gmin + 0.01, gmin + 1.0, 10.0, 50.0] {
            if g < gmin || g == 1.0 {
                continue;
            }
            let lo = power_solution(g, &p, 1.0).unwrap();
            let wp = upper_root_weights(g, &c);
            let up = objective_value(&wp, &p, g, 1.0).unwrap();
            assert!(lo.expected_utility > up, "seed {seed}, gamma {g}");
        }
    }
}

#[test]
fn optimum_beats_random_portfolios() {
    for seed in 0..20u64 {
        let p = random_market(2 + seed as usize % 7, seed).unwrap();
        let gmin = gamma_min(&efficient_constants(&p)).unwrap();
        let draws = random_feasible(&p, 1000, seed);
        for g in [gmin + 0.1, 3.0, 20.0] {
            if g < gmin {
                continue;
            }
            let sol = power_solution(g, &p, 1.0).unwrap();
            for w in &draws.weights {
                if let Ok(u) = objective_value(w, &p, g, 1.0) {
                    assert!(u <= sol.expected_utility, "seed {seed}, gamma {g}");
                }
            }
        }
    }
}

#[test]
fn continuous_through_log_utility() {
    let mut tested = 0;
    for seed in 0..200u64 {
        let p = random_market(2 + seed as usize % 4, seed).unwrap();
        if gamma_min(&efficient_constants(&p)).unwrap() >= 1.0 - 1e-3 {
            continue;
        }
        let log = log_solution(&p, 1.0).unwrap();
        for g in [1.0 - 1e-6, 1.0 + 1e-6] {
            let w = power_solution(g, &p, 1.0).unwrap().weights;
            assert!(w.max_abs_diff(&log.weights) < 1e-4);
        }
        tested += 1;
    }
    assert!(tested > 0);
}

#[test]
fn efficiency_matches_branch() {
    let mut negative = 0;
    for seed in 0..200u64 {
        let p = if seed % 2 == 0 {
            random_market(2 + seed as usize % 7, seed).unwrap()
        } else {
            market_with(-0.05 * (1 + seed % 5) as f64, 0.01, 0.02 + 0.01 * (seed % 7) as f64)
        };
        let c = efficient_constants(&p);
        let gmin = gamma_min(&c).unwrap();
        for g in [gmin + 0.1, gmin + 5.0] {
            if c.r_gmv() < 0.0 {
                // the lower root is negative, so ln X is undefined
                assert_eq!(power_solution(g, &p, 1.0).err(), Some(Error::NonPositiveOptimalMean));
                assert!(!is_mv_efficient_power(g, &c));
                negative += 1;
                continue;
            }
            let sol = power_solution(g, &p, 1.0).unwrap();
            let upper = sol.x > c.r_gmv() && c.r_gmv() > 0.0;
            assert!(upper);
            assert_eq!(sol.mv_efficient, upper);
            assert_eq!(is_mv_efficient_power(g, &c), upper);
        }
    }
    assert!(negative > 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn never_at_gmv(seed in 0u64..10_000, k in 2usize..9, dg in 0.0f64..30.0) {
        let p = random_market(k, seed).unwrap();
        let c = efficient_constants(&p);
        let g = gamma_min(&c).unwrap() + dg;
        let sol = power_solution(g, &p, 1.0).unwrap();
        prop_assert!((sol.x - c.r_gmv()).abs() > 0.0);
        let at_gmv = second_moment(g, c.r_gmv(), &c);
        prop_assert!((at_gmv + g * c.v_gmv()).abs() <= 1e-12 * g * c.v_gmv() / c.s());
    }

    #[test]
    fn markowitz_form(seed in 0u64..10_000, k in 2usize..9, dg in 0.0f64..100.0) {
        let p = random_market(k, seed).unwrap();
        let c = efficient_constants(&p);
        let g = gamma_min(&c).unwrap() + dg;
        let sol = power_solution(g, &p, 1.0).unwrap();
        let w = markowitz_weights(sol.x, &c).unwrap();
        prop_assert!(sol.weights.max_abs_diff(&w) <= 1e-10);
    }

    #[test]
    fn wealth_only_rescales(seed in 0u64..1000, w0 in 0.1f64..100.0) {
        let p = random_market(3, seed).unwrap();
        let g = gamma_min(&efficient_constants(&p)).unwrap() + 1.5;
        let a = power_solution(g, &p, 1.0).unwrap();
        let b = power_solution(g, &p, w0).unwrap();
        prop_assert_eq!(a.weights, b.weights);
        let ratio = b.expected_utility / a.expected_utility;
        prop_assert!((ratio - w0.powf(1.0 - g)).abs() <= 1e-12 * ratio);
    }
}
