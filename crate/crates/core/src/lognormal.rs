//! Log-normal moments, parameter matching, and the distance between a normal
//! law and the log-normal law sharing its location and scale.

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::stats::normal_cdf;

/// Largest exponent accepted by [`lognormal_moment`].
pub const MAX_EXPONENT: f64 = 700.0;

/// Minimum grid size for [`psi_sup_empirical`].
pub const MIN_GRID: usize = 1000;

/// `ln W ~ N(alpha, beta2)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LogNormalParams<T = f64> {
    pub alpha: T,
    pub beta2: T,
}

impl<T: Real> LogNormalParams<T> {
    pub fn new(alpha: T, beta2: T) -> Result<Self> {
        if !alpha.is_finite() || !beta2.is_finite() {
            return Err(Error::InvalidArgument("non-finite log-normal parameter".into()));
        }
        if !(beta2 > T::zero()) {
            return Err(Error::NonPositiveVariance);
        }
        Ok(Self { alpha, beta2 })
    }

    pub fn mean(&self) -> Result<T> {
        lognormal_moment(self, T::one())
    }

    pub fn variance(&self) -> Result<T> {
        let m = self.mean()?;
        Ok(m * m * self.beta2.exp_m1())
    }
}

/// `E[W^tau] = exp(alpha tau + beta2 tau^2 / 2)`.
pub fn lognormal_moment<T: Real>(p: &LogNormalParams<T>, tau: T) -> Result<T> {
    let e = p.alpha * tau + T::of(0.5) * p.beta2 * tau * tau;
    if e > T::of(MAX_EXPONENT) {
        return Err(Error::MomentOverflow(e.approx_f64()));
    }
    let m = e.exp();
    if !m.is_finite() {
        return Err(Error::MomentOverflow(e.approx_f64()));
    }
    Ok(m)
}

/// Log-normal law with mean `e` and variance `v`:
/// `beta2 = ln(1 + v/e^2)`, `alpha = ln e - beta2/2`.
pub fn match_params<T: Real>(e: T, v: T) -> Result<LogNormalParams<T>> {
    if !(e > T::zero()) {
        return Err(Error::NonPositiveMean);
    }
    if !(v > T::zero()) {
        return Err(Error::NonPositiveVariance);
    }
    let beta2 = (v / (e * e)).ln_1p();
    LogNormalParams::new(e.ln() - T::of(0.5) * beta2, beta2)
}

/// `Phi((x - mu)/sigma) - Phi(ln(x/mu) / (sigma/mu))`, the second term taken
/// as zero for `x <= 0`.
///
/// # Panics
/// If `mu` or `sigma` is not positive.
pub fn psi<T: Real>(x: T, mu: T, sigma: T) -> T {
    assert!(mu > T::zero() && sigma > T::zero(), "psi needs mu > 0 and sigma > 0");
    let normal = normal_cdf((x - mu) / sigma);
    if x <= T::zero() {
        return normal;
    }
    normal - normal_cdf((x / mu).ln() / (sigma / mu))
}

fn check_location_scale<T: Real>(mu: T, sigma: T) -> Result<()> {
    if !(mu > T::zero()) || !mu.is_finite() {
        return Err(Error::NonPositiveMean);
    }
    if !(sigma > T::zero()) || !sigma.is_finite() {
        return Err(Error::NonPositiveVariance);
    }
    Ok(())
}

/// Analytic upper bound on `sup |psi|`, of order `sigma/mu`.
pub fn psi_sup_bound<T: Real>(mu: T, sigma: T) -> Result<T> {
    check_location_scale(mu, sigma)?;
    let r = sigma / mu;
    let r2 = r * r;
    let root = (r2 * r2 + T::one()).sqrt();
    // t = 1 - r^2 - sqrt(r^4 + 1); the first branch is (e^t - 1 - t) / r
    let t = -r2 - r2 * r2 / (root + T::one());
    let first = (t.exp_m1() - t) / r;
    let two_r = r + r;
    let second = (two_r.exp_m1() - two_r) / r;
    Ok(first.max(second) * T::of(0.398_942_280_401_432_7))
}

/// Largest `|psi|` over a grid that brackets both extrema: the intervals
/// `mu (e^{1-r^2-sqrt(r^4+1)}, e^{-2r^2})` and `mu (1, e^{2r})`, plus a
/// log-spaced envelope over `(mu e^{-10r}, mu e^{10r})`, with `r = sigma/mu`
/// and `n_grid` points on each piece.
pub fn psi_sup_empirical<T: Real>(mu: T, sigma: T, n_grid: usize) -> Result<T> {
    check_location_scale(mu, sigma)?;
    if n_grid < MIN_GRID {
        return Err(Error::InvalidArgument(format!(
            "n_grid must be at least {MIN_GRID}, got {n_grid}"
        )));
    }
    let r = sigma / mu;
    let r2 = r * r;
    let l1_a = (T::one() - r2 - (r2 * r2 + T::one()).sqrt()).exp();
    let l1_b = (-(r2 + r2)).exp();
    let (l1_lo, l1_hi) = if l1_a <= l1_b { (l1_a, l1_b) } else { (l1_b, l1_a) };
    let l2_hi = (r + r).exp();
    let ten_r = T::of(10.0) * r;

    let last = T::of_usize(n_grid - 1);
    let mut best = T::zero();
    let mut scan = |y: T| {
        let v = psi(mu * y, mu, sigma).abs();
        if v > best {
            best = v;
        }
    };
    for i in 0..n_grid {
        let t = T::of_usize(i) / last;
        scan(l1_lo + (l1_hi - l1_lo) * t);
        scan(T::one() + (l2_hi - T::one()) * t);
        scan((-ten_r + (ten_r + ten_r) * t).exp());
    }
    Ok(best)
}
