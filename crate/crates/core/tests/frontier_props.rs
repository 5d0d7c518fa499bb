use crra_core::frontier::{
    efficient_constants, gmv_weights, markowitz_weights, parabola_variance, portfolio_moments,
    sharpe_weights, Weights,
};
use crra_core::market::random_market;
use crra_core::oracle::random_feasible;
use proptest::prelude::*;

#[test]
fn gmv_has_least_variance() {
    for seed in 0..10 {
        let p = random_market(2 + seed as usize % 6, seed).unwrap();
        let c = efficient_constants(&p);
        let draws = random_feasible(&p, 1000, seed);
        for w in &draws.weights {
            let (_, v) = portfolio_moments(w, &p).unwrap();
            assert!(v >= c.v_gmv() * (1.0 - 1e-10));
        }
        let (_, v) = portfolio_moments(&gmv_weights(&p).unwrap(), &p).unwrap();
        assert!((v - c.v_gmv()).abs() <= 1e-10 * c.v_gmv());
    }
}

#[test]
fn q_annihilates_ones() {
    for seed in 0..50 {
        let p = random_market(2 + seed as usize % 7, seed).unwrap();
        let c = efficient_constants(&p);
        let one_q_mu: f64 = c.q_mu().iter().sum();
        let mu_q_mu: f64 = c.q_mu().iter().zip(p.mu()).map(|(a, b)| a * b).sum();
        let scale: f64 = c.q_mu().iter().map(|x| x.abs()).sum();
        assert!(one_q_mu.abs() < 1e-10, "seed {seed}: {one_q_mu:e} scale {scale:e}");
        assert!((mu_q_mu - c.s()).abs() <= 1e-10, "seed {seed}: {mu_q_mu:e} vs {:e}", c.s());
    }
}

proptest! {
    #[test]
    fn markowitz_lies_on_parabola(seed in 0u64..500, k in 2usize..9, x in 0.8f64..1.4) {
        let p = random_market(k, seed).unwrap();
        let c = efficient_constants(&p);
        let w = markowitz_weights(x, &c).unwrap();
        let (m, v) = portfolio_moments(&w, &p).unwrap();
        prop_assert!((m - x).abs() < 1e-10);
        let want = parabola_variance(x, &c).unwrap();
        prop_assert!((v - want).abs() <= 1e-8 * want);
    }

    #[test]
    fn scale_invariant_portfolios(seed in 0u64..500, k in 2usize..9, t in 1e-3f64..1e3) {
        let p = random_market(k, seed).unwrap();
        let scaled = p.with_scaled_covariance(t).unwrap();
        let d_gmv = gmv_weights(&p).unwrap().max_abs_diff(&gmv_weights(&scaled).unwrap());
        let d_sh = sharpe_weights(&p).unwrap().max_abs_diff(&sharpe_weights(&scaled).unwrap());
        prop_assert!(d_gmv < 1e-10 && d_sh < 1e-10);
    }

    #[test]
    fn weights_reject_bad_sum(v in prop::collection::vec(-3.0f64..3.0, 2..6)) {
        let s: f64 = v.iter().sum();
        prop_assume!((s - 1.0).abs() > 1e-6);
        prop_assert!(Weights::new(v).is_err());
    }
}
