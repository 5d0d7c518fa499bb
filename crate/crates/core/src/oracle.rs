//! Brute-force maximization of the model expected utility over all fully
//! invested portfolios.
//!
//! The budget constraint is removed by substitution: the search runs over
//! `u` in `R^(k-1)` and the portfolio is `(u_1, ..., u_(k-1), 1 - sum(u))`.
//! Each start runs a Nelder-Mead simplex search, restarted with a fresh
//! simplex at its best point until that stops improving.
//!
//! The objective is unbounded in the direction of unlimited leverage (it
//! tends to `0` from below for `gamma > 1` and to `+inf` for `gamma < 1`), so
//! the oracle looks for the best interior local maximum: portfolios beyond a
//! leverage cap score `-inf`, and starts that end up against the cap are
//! reported as runaways and excluded.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::crra::utility_of_moments;
use crate::error::{Error, Result};
use crate::frontier::{efficient_constants, Weights};
use crate::linalg::dot;
use crate::market::MarketParams;
use crate::scalar::Real;

/// Box from which random portfolio coordinates are drawn.
pub const DRAW_BOX: (f64, f64) = (-2.0, 3.0);

/// Points with `w'mu` at or below this are outside the objective's domain.
pub const DOMAIN_FLOOR: f64 = 1e-10;

const MAX_REDRAWS: usize = 100;
const MAX_RESTARTS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    pub n_starts: usize,
    pub max_iters: usize,
    pub tol_obj: f64,
    pub tol_w: f64,
    pub seed: u64,
    /// Largest admissible `max |w_i|`.
    pub leverage_cap: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            n_starts: 16,
            max_iters: 20_000,
            tol_obj: 1e-12,
            tol_w: 1e-6,
            seed: 0,
            leverage_cap: 1e3,
        }
    }
}

impl OracleConfig {
    fn validate(&self) -> Result<()> {
        if self.n_starts == 0 || self.max_iters == 0 {
            return Err(Error::InvalidArgument(
                "n_starts and max_iters must be at least 1".into(),
            ));
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.tol_obj) || !positive(self.tol_w) || !positive(self.leverage_cap) {
            return Err(Error::InvalidArgument(
                "tolerances and leverage cap must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult<T = f64> {
    pub weights: Weights<T>,
    pub objective: T,
    /// Starts that ended at an interior point.
    pub n_converged: usize,
    /// Starts that ran to the leverage cap.
    pub n_runaway: usize,
    /// Objective evaluations over all starts.
    pub n_evals: usize,
}

struct Objective<'a, T> {
    mu: &'a [T],
    params: &'a MarketParams<T>,
    gamma: T,
    cap: T,
    evals: usize,
}

impl<T: Real> Objective<'_, T> {
    fn weights(u: &[T]) -> Vec<T> {
        let mut w = u.to_vec();
        let last = u.iter().fold(T::one(), |acc, &v| acc - v);
        w.push(last);
        w
    }

    fn eval(&mut self, u: &[T]) -> T {
        self.evals += 1;
        let w = Self::weights(u);
        if w.iter().any(|v| !(v.abs() <= self.cap)) {
            return T::neg_infinity();
        }
        let x = dot(&w, self.mu);
        if !(x > T::of(DOMAIN_FLOOR)) {
            return T::neg_infinity();
        }
        let y = self.params.sigma().quad_form(&w) + x * x;
        let f = utility_of_moments(self.gamma, x, y, T::one());
        if f.is_nan() {
            T::neg_infinity()
        } else {
            f
        }
    }
}

/// Numerically maximizes the expected utility at `gamma` (with `W0 = 1`).
///
/// Starts: GMV, Sharpe (when defined), equal weights, then seeded random
/// feasible portfolios up to `n_starts`.
pub fn maximize_numeric<T: Real>(
    params: &MarketParams<T>,
    gamma: T,
    cfg: &OracleConfig,
) -> Result<OracleResult<T>> {
    cfg.validate()?;
    if !(gamma > T::zero()) || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "gamma must be positive, got {gamma:?}"
        )));
    }
    let constants = efficient_constants(params);
    constants.require_slope()?;
    let k = params.k();

    let mut starts: Vec<Vec<T>> = Vec::with_capacity(cfg.n_starts);
    let a = constants.a();
    starts.push(constants.inv_sigma_one().iter().map(|&v| v / a).collect());
    if let Ok(_) = constants.sharpe_return() {
        let b = constants.b();
        starts.push(constants.inv_sigma_mu().iter().map(|&v| v / b).collect());
    }
    starts.push(vec![T::one() / T::of_usize(k); k]);
    starts.truncate(cfg.n_starts);
    if starts.len() < cfg.n_starts {
        let extra = random_feasible(params, cfg.n_starts - starts.len(), cfg.seed);
        starts.extend(extra.weights.into_iter().map(Weights::into_vec));
    }

    let mut obj = Objective {
        mu: params.mu(),
        params,
        gamma,
        cap: T::of(cfg.leverage_cap),
        evals: 0,
    };
    let runaway_level = T::of(0.9 * cfg.leverage_cap);

    let mut best: Option<(Vec<T>, T)> = None;
    let mut any_feasible = false;
    let (mut n_converged, mut n_runaway) = (0, 0);
    for start in &starts {
        let u0 = &start[..k - 1];
        if obj.eval(u0) == T::neg_infinity() {
            continue;
        }
        any_feasible = true;
        let (u, f) = local_max(&mut obj, u0, cfg);
        let w = Objective::<T>::weights(&u);
        if w.iter().any(|v| v.abs() > runaway_level) || f == T::neg_infinity() {
            n_runaway += 1;
            continue;
        }
        n_converged += 1;
        if best.as_ref().map_or(true, |(_, bf)| f > *bf) {
            best = Some((w, f));
        }
    }
    if !any_feasible {
        return Err(Error::EmptyDomain);
    }
    let (w, f) = best.ok_or(Error::NoInteriorMaximum)?;
    Ok(OracleResult {
        weights: Weights::new(w)?,
        objective: f,
        n_converged,
        n_runaway,
        n_evals: obj.evals,
    })
}

fn local_max<T: Real>(obj: &mut Objective<'_, T>, u0: &[T], cfg: &OracleConfig) -> (Vec<T>, T) {
    let (mut u, mut f) = nelder_mead(obj, u0, T::of(0.1), cfg);
    for _ in 0..MAX_RESTARTS {
        let (u2, f2) = nelder_mead(obj, &u, T::of(1e-3), cfg);
        let moved = u
            .iter()
            .zip(&u2)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()));
        let gain = f2 - f;
        let improved = f2 > f;
        if improved {
            u = u2;
            f = f2;
        }
        let tiny_gain = !(gain > T::of(cfg.tol_obj * 1e-3) * f.abs());
        if tiny_gain && moved <= T::of(cfg.tol_w * 1e-2) {
            break;
        }
    }
    (u, f)
}

/// Maximizes `obj` from `u0` with an initial simplex of edge `step`.
fn nelder_mead<T: Real>(
    obj: &mut Objective<'_, T>,
    u0: &[T],
    step: T,
    cfg: &OracleConfig,
) -> (Vec<T>, T) {
    let n = u0.len();
    let nf = T::of_usize(n);
    let one = T::one();
    // dimension-adapted coefficients (Gao and Han); standard ones up to n = 2
    let na = T::of_usize(n.max(2));
    let alpha = one;
    let beta = one + T::of(2.0) / na;
    let gamma_c = T::of(0.75) - T::of(0.5) / na;
    let delta = one - one / na;

    let mut simplex: Vec<(Vec<T>, T)> = Vec::with_capacity(n + 1);
    simplex.push((u0.to_vec(), -obj.eval(u0)));
    for i in 0..n {
        let mut p = u0.to_vec();
        p[i] = p[i] + step * (one + p[i].abs());
        let g = -obj.eval(&p);
        simplex.push((p, g));
    }

    let xtol = T::of(cfg.tol_w * 1e-3);
    let ftol = T::of(cfg.tol_obj * 1e-3);
    for _ in 0..cfg.max_iters {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let g_best = simplex[0].1;
        let g_worst = simplex[n].1;
        let diam = simplex[1..].iter().fold(T::zero(), |acc, (p, _)| {
            p.iter()
                .zip(&simplex[0].0)
                .fold(acc, |m, (&a, &b)| m.max((a - b).abs()))
        });
        let spread = g_worst - g_best;
        if diam <= xtol || (spread <= ftol * g_best.abs() && diam <= T::of(cfg.tol_w)) {
            break;
        }

        let mut centroid = vec![T::zero(); n];
        for (p, _) in &simplex[..n] {
            for (c, &v) in centroid.iter_mut().zip(p) {
                *c = *c + v;
            }
        }
        for c in centroid.iter_mut() {
            *c = *c / nf;
        }
        let along = |t: T, from: &[T]| -> Vec<T> {
            centroid
                .iter()
                .zip(from)
                .map(|(&c, &w)| c + t * (c - w))
                .collect()
        };

        let worst = simplex[n].0.clone();
        let xr = along(alpha, &worst);
        let gr = -obj.eval(&xr);
        if gr < g_best {
            let xe = along(alpha * beta, &worst);
            let ge = -obj.eval(&xe);
            simplex[n] = if ge < gr { (xe, ge) } else { (xr, gr) };
            continue;
        }
        if gr < simplex[n - 1].1 {
            simplex[n] = (xr, gr);
            continue;
        }
        let (xc, gc) = if gr < g_worst {
            let xc = along(alpha * gamma_c, &worst);
            let gc = -obj.eval(&xc);
            (xc, gc)
        } else {
            let xc = along(-gamma_c, &worst);
            let gc = -obj.eval(&xc);
            (xc, gc)
        };
        if gc < gr.min(g_worst) {
            simplex[n] = (xc, gc);
            continue;
        }
        let best = simplex[0].0.clone();
        for (p, g) in simplex[1..].iter_mut() {
            for (v, &b) in p.iter_mut().zip(&best) {
                *v = b + delta * (*v - b);
            }
            *g = -obj.eval(p);
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    let (u, g) = simplex.swap_remove(0);
    (u, -g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomDraws<T = f64> {
    pub weights: Vec<Weights<T>>,
    /// Draws abandoned after 100 attempts with `w'mu <= 0`.
    pub skipped: usize,
    /// Rejected attempts over all draws.
    pub rejected: usize,
}

/// `n` fully invested portfolios: the first `k - 1` coordinates uniform on
/// `[-2, 3]`, the last closing the budget. Draws with `w'mu <= 0` are
/// redrawn up to 100 times and then skipped.
pub fn random_feasible<T: Real>(params: &MarketParams<T>, n: usize, seed: u64) -> RandomDraws<T> {
    let k = params.k();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(n);
    let mut skipped = 0;
    let mut rejected = 0;
    for _ in 0..n {
        let mut accepted = None;
        for _ in 0..MAX_REDRAWS {
            let mut w: Vec<T> = (0..k - 1)
                .map(|_| T::of(rng.random_range(DRAW_BOX.0..DRAW_BOX.1)))
                .collect();
            let last = w.iter().fold(T::one(), |acc, &v| acc - v);
            w.push(last);
            if dot(&w, params.mu()) > T::zero() {
                accepted = Some(w);
                break;
            }
            rejected += 1;
        }
        match accepted.map(Weights::new) {
            Some(Ok(w)) => weights.push(w),
            _ => skipped += 1,
        }
    }
    RandomDraws {
        weights,
        skipped,
        rejected,
    }
}
