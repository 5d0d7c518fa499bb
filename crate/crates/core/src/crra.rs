//! Closed-form optimal portfolios for power and log utility when the
//! portfolio's gross return is replaced by the log-normal law with the same
//! mean and variance.
//!
//! Writing `X = w'mu` and `Y = w'Sigma w + X^2`, the expected utility of
//! terminal wealth `W0 w'R` is
//!
//! ```text
//! gamma != 1:  W0^(1-gamma) / (1-gamma) * exp((1-gamma^2) ln X + (gamma^2-gamma)/2 ln Y)
//! gamma == 1:  ln W0 + 2 ln X - ln(Y) / 2
//! ```
//!
//! The optimum sits on the Markowitz parabola at the smaller root of
//! `(1+s) X^2 - (gamma+2) R X + (gamma+1)(R^2 + s V) = 0`, with
//! `(R, V, s)` the efficient-set constants. The root is real iff
//! `gamma >= gamma_min`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::frontier::{efficient_constants, markowitz_weights, FrontierConstants, Weights};
use crate::linalg::dot;
use crate::market::MarketParams;
use crate::scalar::Real;

/// Relative width of the band of slightly negative discriminants that are
/// rounded to zero.
pub const DISCRIMINANT_CLAMP: f64 = 1e-12;

/// Optimum of the power (or, for `gamma = 1`, log) utility problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrraSolution<T = f64> {
    pub gamma: T,
    /// Expected gross return `w'mu`.
    pub x: T,
    /// Second moment `w'Sigma w + x^2`.
    pub y: T,
    /// Variance `y - x^2`.
    pub v: T,
    pub weights: Weights<T>,
    /// May overflow to `-inf` (or underflow to `0`) for very large `gamma`.
    pub expected_utility: T,
    pub mv_efficient: bool,
    pub w0: T,
}

/// Existence data for a market: `gamma_min` and the discriminant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaCondition<T = f64> {
    pub gamma_min: T,
    pub r_gmv_positive: bool,
    r_gmv: T,
    v_gmv: T,
    s: T,
}

impl<T: Real> GammaCondition<T> {
    pub fn new(constants: &FrontierConstants<T>) -> Result<Self> {
        Ok(Self {
            gamma_min: gamma_min(constants)?,
            r_gmv_positive: constants.r_gmv() > T::zero(),
            r_gmv: constants.r_gmv(),
            v_gmv: constants.v_gmv(),
            s: constants.s(),
        })
    }

    pub fn discriminant_at(&self, gamma: T) -> T {
        discriminant_raw(gamma, self.r_gmv, self.v_gmv, self.s)
    }

    pub fn exists(&self, gamma: T) -> bool {
        gamma >= self.gamma_min
    }
}

fn discriminant_raw<T: Real>(gamma: T, r: T, v: T, s: T) -> T {
    let one = T::one();
    let g2 = gamma + T::of(2.0);
    let r2 = r * r;
    g2 * g2 * r2 - T::of(4.0) * (gamma + one) * (one + s) * (r2 + s * v)
}

/// `(gamma+2)^2 R^2 - 4 (gamma+1)(1+s)(R^2 + s V)`.
pub fn discriminant<T: Real>(gamma: T, constants: &FrontierConstants<T>) -> T {
    discriminant_raw(gamma, constants.r_gmv(), constants.v_gmv(), constants.s())
}

/// The same polynomial written as `(gamma - 2s)^2 R^2 - 4(1+s) s (R^2 + (gamma+1) V)`.
pub fn discriminant_alt<T: Real>(gamma: T, constants: &FrontierConstants<T>) -> T {
    let (r, v, s) = (constants.r_gmv(), constants.v_gmv(), constants.s());
    let one = T::one();
    let d = gamma - T::of(2.0) * s;
    d * d * r * r - T::of(4.0) * (one + s) * s * (r * r + (gamma + one) * v)
}

/// Smallest risk aversion for which the optimum exists.
pub fn gamma_min<T: Real>(constants: &FrontierConstants<T>) -> Result<T> {
    constants.require_slope()?;
    let r = constants.r_gmv();
    if r == T::zero() {
        return Err(Error::ZeroGmvReturn);
    }
    let s = constants.s();
    let one = T::one();
    let two = T::of(2.0);
    let u = constants.v_gmv() / (r * r);
    let root = (s * (one + s) * (one + s * u) * (one + (one + s) * u)).sqrt();
    let g = two * s + two * (s * (one + s) * u + root);

    #[cfg(debug_assertions)]
    bisection_check(g, constants);

    Ok(g)
}

#[cfg(debug_assertions)]
fn bisection_check<T: Real>(g: T, constants: &FrontierConstants<T>) {
    let two_s = T::of(2.0) * constants.s();
    let (mut lo, mut hi) = (two_s, two_s + T::of(10.0));
    if !(discriminant(lo, constants) < T::zero() && discriminant(hi, constants) > T::zero()) {
        return;
    }
    for _ in 0..200 {
        let mid = (lo + hi) / T::of(2.0);
        if discriminant(mid, constants) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    debug_assert!(
        (hi - g).abs() <= T::tol(1e-8) * (T::one() + g),
        "gamma_min closed form {g:?} disagrees with bisection {hi:?}"
    );
}

/// `gamma >= gamma_min` and `R_GMV > 0`.
pub fn is_mv_efficient_power<T: Real>(gamma: T, constants: &FrontierConstants<T>) -> bool {
    match gamma_min(constants) {
        Ok(g) => gamma >= g && constants.r_gmv() > T::zero(),
        Err(_) => false,
    }
}

/// Discriminant at `gamma`, with tiny negative values rounded to zero.
fn usable_discriminant<T: Real>(gamma: T, constants: &FrontierConstants<T>) -> Option<T> {
    let d = discriminant(gamma, constants);
    if d >= T::zero() {
        return Some(d);
    }
    let r = constants.r_gmv();
    let g2 = gamma + T::of(2.0);
    if d > -T::of(DISCRIMINANT_CLAMP) * r * r * g2 * g2 {
        Some(T::zero())
    } else {
        None
    }
}

/// Smaller root `X` of the optimality quadratic, given a usable discriminant.
fn lower_root<T: Real>(gamma: T, d: T, constants: &FrontierConstants<T>) -> T {
    let (r, v, s) = (constants.r_gmv(), constants.v_gmv(), constants.s());
    let one = T::one();
    let two = T::of(2.0);
    let g2 = gamma + two;
    if r > T::zero() {
        // product of roots over the larger root; no cancellation
        two * (gamma + one) * (r * r + s * v) / (g2 * r + d.sqrt())
    } else {
        (g2 * r - d.sqrt()) / (two * (one + s))
    }
}

/// `Y = (gamma/s)(X R - R^2 - s V)`.
pub fn second_moment<T: Real>(gamma: T, x: T, constants: &FrontierConstants<T>) -> T {
    let (r, v, s) = (constants.r_gmv(), constants.v_gmv(), constants.s());
    gamma / s * (r * (x - r) - s * v)
}

/// `inv(Sigma)[(-1 + (gamma+1) mu / X) Y / gamma - X mu]` for a given
/// `(X, Y)`.
pub fn stationary_weights<T: Real>(
    gamma: T,
    x: T,
    y: T,
    constants: &FrontierConstants<T>,
) -> Result<Weights<T>> {
    let c1 = -y / gamma;
    let c2 = (gamma + T::one()) * y / (gamma * x) - x;
    let w = constants
        .inv_sigma_one()
        .iter()
        .zip(constants.inv_sigma_mu())
        .map(|(&o, &m)| c1 * o + c2 * m)
        .collect();
    Weights::new(w)
}

/// Model expected utility of a portfolio with mean `x` and second moment
/// `y`; no domain checks.
pub fn utility_of_moments<T: Real>(gamma: T, x: T, y: T, w0: T) -> T {
    let one = T::one();
    if gamma == one {
        return w0.ln() + T::of(2.0) * x.ln() - T::of(0.5) * y.ln();
    }
    let e = (one - gamma * gamma) * x.ln() + T::of(0.5) * (gamma * gamma - gamma) * y.ln();
    w0.powf(one - gamma) / (one - gamma) * e.exp()
}

fn check_gamma_w0<T: Real>(gamma: T, w0: T) -> Result<()> {
    if !(gamma > T::zero()) || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "gamma must be positive and finite, got {gamma:?}"
        )));
    }
    if !(w0 > T::zero()) || !w0.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "w0 must be positive and finite, got {w0:?}"
        )));
    }
    Ok(())
}

fn assemble<T: Real>(
    gamma: T,
    x: T,
    constants: &FrontierConstants<T>,
    w0: T,
) -> Result<CrraSolution<T>> {
    if !(x > T::zero()) {
        return Err(Error::NonPositiveOptimalMean);
    }
    // equals second_moment() on the optimality quadratic; this form keeps
    // its accuracy when gamma is large
    let d = x - constants.r_gmv();
    let v = d * d / constants.s() + constants.v_gmv();
    let y = x * x + v;
    if !(y > T::zero()) {
        return Err(Error::NonPositiveSecondMoment(y.approx_f64()));
    }
    // the stationary point lies on the frontier; the Markowitz form avoids the
    // cancellation between inv(Sigma)1 and inv(Sigma)mu terms when s is small
    let weights = markowitz_weights(x, constants)?;
    Ok(CrraSolution {
        gamma,
        x,
        y,
        v,
        weights,
        expected_utility: utility_of_moments(gamma, x, y, w0),
        mv_efficient: constants.r_gmv() > T::zero(),
        w0,
    })
}

/// Power-utility optimum for relative risk aversion `gamma`; `gamma = 1`
/// is delegated to [`log_solution`].
pub fn power_solution<T: Real>(
    gamma: T,
    params: &MarketParams<T>,
    w0: T,
) -> Result<CrraSolution<T>> {
    check_gamma_w0(gamma, w0)?;
    if gamma == T::one() {
        return log_solution(params, w0);
    }
    let constants = efficient_constants(params);
    power_solution_with(gamma, &constants, w0)
}

/// [`power_solution`] for precomputed constants.
pub fn power_solution_with<T: Real>(
    gamma: T,
    constants: &FrontierConstants<T>,
    w0: T,
) -> Result<CrraSolution<T>> {
    check_gamma_w0(gamma, w0)?;
    if gamma == T::one() {
        return log_solution_with(constants, w0);
    }
    let g_min = gamma_min(constants)?;
    let d = usable_discriminant(gamma, constants).ok_or(Error::BelowGammaMin {
        gamma: gamma.approx_f64(),
        gamma_min: g_min.approx_f64(),
    })?;
    let x = lower_root(gamma, d, constants);
    assemble(gamma, x, constants, w0)
}

/// Log-utility optimum; exists iff `gamma_min <= 1`.
pub fn log_solution<T: Real>(params: &MarketParams<T>, w0: T) -> Result<CrraSolution<T>> {
    log_solution_with(&efficient_constants(params), w0)
}

/// [`log_solution`] for precomputed constants.
pub fn log_solution_with<T: Real>(
    constants: &FrontierConstants<T>,
    w0: T,
) -> Result<CrraSolution<T>> {
    let one = T::one();
    check_gamma_w0(one, w0)?;
    let g_min = gamma_min(constants)?;
    if g_min > one {
        return Err(Error::LogSolutionMissing(g_min.approx_f64()));
    }
    let d = usable_discriminant(one, constants)
        .ok_or(Error::LogSolutionMissing(g_min.approx_f64()))?;
    let x = lower_root(one, d, constants);
    assemble(one, x, constants, w0)
}

/// Model expected utility of an arbitrary portfolio.
pub fn objective_value<T: Real>(
    w: &Weights<T>,
    params: &MarketParams<T>,
    gamma: T,
    w0: T,
) -> Result<T> {
    check_gamma_w0(gamma, w0)?;
    if w.len() != params.k() {
        return Err(Error::Dimension(format!(
            "{} weights for {} assets",
            w.len(),
            params.k()
        )));
    }
    let x = dot(w.as_slice(), params.mu());
    if !(x > T::zero()) {
        return Err(Error::OutsideDomain);
    }
    let y = params.sigma().quad_form(w.as_slice()) + x * x;
    Ok(utility_of_moments(gamma, x, y, w0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityRow<T = f64> {
    pub gamma: T,
    pub x: T,
    pub v: T,
    pub x_at_least_sharpe: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport<T = f64> {
    pub rows: Vec<MonotonicityRow<T>>,
    pub sharpe_return: T,
    pub x_decreasing: bool,
    pub v_decreasing: bool,
    pub x_above_sharpe: bool,
}

impl<T> MonotonicityReport<T> {
    pub fn passed(&self) -> bool {
        self.x_decreasing && self.v_decreasing && self.x_above_sharpe
    }
}

/// Evaluates the optimum along an ascending `gammas` grid and checks that
/// its mean and variance strictly decrease and its mean never falls below
/// the Sharpe portfolio's.
pub fn monotonicity_check<T: Real>(
    params: &MarketParams<T>,
    gammas: &[T],
) -> Result<MonotonicityReport<T>> {
    if gammas.is_empty() {
        return Err(Error::Empty);
    }
    if gammas.windows(2).any(|p| !(p[0] < p[1])) {
        return Err(Error::InvalidArgument("gammas must be strictly ascending".into()));
    }
    let constants = efficient_constants(params);
    if !(constants.r_gmv() > T::zero()) {
        return Err(Error::InvalidArgument("R_GMV must be positive".into()));
    }
    let g_min = gamma_min(&constants)?;
    if gammas[0] < g_min {
        return Err(Error::BelowGammaMin {
            gamma: gammas[0].approx_f64(),
            gamma_min: g_min.approx_f64(),
        });
    }
    let sharpe = constants.sharpe_return()?;
    let mut rows = Vec::with_capacity(gammas.len());
    for &g in gammas {
        let sol = power_solution_with(g, &constants, T::one())?;
        rows.push(MonotonicityRow {
            gamma: g,
            x: sol.x,
            v: sol.v,
            x_at_least_sharpe: sol.x >= sharpe,
        });
    }
    let x_decreasing = rows.windows(2).all(|p| p[1].x < p[0].x);
    let v_decreasing = rows.windows(2).all(|p| p[1].v < p[0].v);
    let x_above_sharpe = rows.iter().all(|r| r.x_at_least_sharpe);
    Ok(MonotonicityReport {
        rows,
        sharpe_return: sharpe,
        x_decreasing,
        v_decreasing,
        x_above_sharpe,
    })
}
