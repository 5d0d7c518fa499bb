//! Efficient-set constants, GMV and Sharpe portfolios, and the mean-variance
//! parabola.
//!
//! With `a = 1'inv(S)1`, `b = 1'inv(S)mu` and `c = mu'inv(S)mu`:
//!
//! ```text
//! R_GMV = b / a      V_GMV = 1 / a      s = c - b^2 / a
//! Q     = inv(S) - inv(S) 1 1' inv(S) / a
//! ```
//!
//! Every feasible portfolio `w` (with `w'1 = 1`) has variance at least
//! `(w'mu - R_GMV)^2 / s + V_GMV`, with equality exactly on the Markowitz
//! portfolios.

use std::ops::Index;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::market::MarketParams;
use crate::scalar::Scalar;

/// Below this slope the frontier is treated as degenerate.
pub const S_MIN: f64 = 1e-12;

/// Absolute tolerance on `w'1 = 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierConstants<T> {
    r_gmv: T,
    v_gmv: T,
    s: T,
    q: Matrix<T>,
    a: T,
    b: T,
    c: T,
    inv_one: Vec<T>,
    inv_mu: Vec<T>,
    q_mu: Vec<T>,
}

impl<T: Scalar> FrontierConstants<T> {
    /// Expected gross return of the GMV portfolio.
    pub fn r_gmv(&self) -> T {
        self.r_gmv
    }

    /// Variance of the GMV portfolio.
    pub fn v_gmv(&self) -> T {
        self.v_gmv
    }

    /// Slope parameter `mu'Q mu`, clamped at zero.
    pub fn s(&self) -> T {
        self.s
    }

    pub fn q(&self) -> &Matrix<T> {
        &self.q
    }

    /// `1'inv(Sigma)1`.
    pub fn a(&self) -> T {
        self.a
    }

    /// `1'inv(Sigma)mu`.
    pub fn b(&self) -> T {
        self.b
    }

    /// `mu'inv(Sigma)mu`.
    pub fn c(&self) -> T {
        self.c
    }

    /// `inv(Sigma)1`.
    pub fn inv_sigma_one(&self) -> &[T] {
        &self.inv_one
    }

    /// `inv(Sigma)mu`.
    pub fn inv_sigma_mu(&self) -> &[T] {
        &self.inv_mu
    }

    /// `Q mu`.
    pub fn q_mu(&self) -> &[T] {
        &self.q_mu
    }

    pub fn k(&self) -> usize {
        self.inv_one.len()
    }

    /// Expected gross return of the Sharpe portfolio, `c / b`.
    pub fn sharpe_return(&self) -> Result<T> {
        self.check_sharpe()?;
        Ok(self.c / self.b)
    }

    /// Fails with [`Error::DegenerateFrontier`] when `s <= S_MIN`.
    pub fn require_slope(&self) -> Result<()> {
        if self.s > T::of(S_MIN) {
            Ok(())
        } else {
            Err(Error::DegenerateFrontier {
                s: self.s.approx_f64(),
            })
        }
    }

    fn check_sharpe(&self) -> Result<()> {
        let scale = self
            .inv_mu
            .iter()
            .fold(T::zero(), |acc, &v| acc + v.magnitude());
        if self.b.magnitude() <= T::tol(1e-14) * scale {
            Err(Error::SharpeUndefined)
        } else {
            Ok(())
        }
    }
}

pub fn efficient_constants<T: Scalar>(params: &MarketParams<T>) -> FrontierConstants<T> {
    let k = params.k();
    let mu = params.mu();
    let inv_one = params.solve(&vec![T::one(); k]);
    let inv_mu = params.solve(mu);
    let a = inv_one.iter().fold(T::zero(), |acc, &v| acc + v);
    let b = dot(&inv_one, mu);
    let c = dot(&inv_mu, mu);

    let inv = params.factor().inverse();
    let mut q = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            q[(i, j)] = inv[(i, j)] - inv_one[i] * inv_one[j] / a;
        }
    }
    // s = (mu - R 1)' inv(Sigma) (mu - R 1), free of the c - b^2/a cancellation
    let r = b / a;
    let centred: Vec<T> = mu.iter().map(|&m| m - r).collect();
    let mut q_mu = params.solve(&centred);
    // 1'q_mu is zero in exact arithmetic; remove the rounding residue so
    // leveraged Markowitz portfolios still meet the budget
    let drift = q_mu.iter().fold(T::zero(), |acc, &v| acc + v) / a;
    for (q, &o) in q_mu.iter_mut().zip(&inv_one) {
        *q = *q - drift * o;
    }
    let s = dot(&centred, &q_mu);
    let s = if s < T::zero() { T::zero() } else { s };

    FrontierConstants {
        r_gmv: r,
        v_gmv: T::one() / a,
        s,
        q,
        a,
        b,
        c,
        inv_one,
        inv_mu,
        q_mu,
    }
}

/// Portfolio weights, summing to one.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
#[serde(transparent)]
pub struct Weights<T = f64>(Vec<T>);

impl<T: Scalar> Weights<T> {
    /// Checks finiteness and `|w'1 - 1| <= 1e-10`. Never renormalizes.
    pub fn new(w: Vec<T>) -> Result<Self> {
        if w.iter().any(|v| !v.is_finite_value()) {
            return Err(Error::NonFiniteWeight);
        }
        let sum = w.iter().fold(T::zero(), |acc, &v| acc + v);
        if (sum - T::one()).magnitude() > T::tol(WEIGHT_SUM_TOL) {
            return Err(Error::WeightSum(sum.approx_f64()));
        }
        Ok(Self(w))
    }

    /// `1/k` in every asset.
    pub fn equal(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::TooFewAssets(0));
        }
        let w = T::one() / T::of_usize(k);
        Self::new(vec![w; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    pub fn sum(&self) -> T {
        self.0.iter().fold(T::zero(), |acc, &v| acc + v)
    }

    /// Largest absolute coordinate difference.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.len(), other.len(), "weight vectors differ in length");
        self.0
            .iter()
            .zip(&other.0)
            .fold(T::zero(), |acc, (&x, &y)| acc.max_of((x - y).magnitude()))
    }
}

impl<T> Index<usize> for Weights<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

/// `inv(Sigma)1 / 1'inv(Sigma)1`.
pub fn gmv_weights<T: Scalar>(params: &MarketParams<T>) -> Result<Weights<T>> {
    let inv_one = params.solve(&vec![T::one(); params.k()]);
    let a = inv_one.iter().fold(T::zero(), |acc, &v| acc + v);
    Weights::new(inv_one.into_iter().map(|v| v / a).collect())
}

/// `inv(Sigma)mu / 1'inv(Sigma)mu`, with `mu` the gross-return mean.
pub fn sharpe_weights<T: Scalar>(params: &MarketParams<T>) -> Result<Weights<T>> {
    let c = efficient_constants(params);
    c.check_sharpe()?;
    Weights::new(c.inv_mu.iter().map(|&v| v / c.b).collect())
}

/// Expected gross return `w'mu` and variance `w'Sigma w`.
pub fn portfolio_moments<T: Scalar>(w: &Weights<T>, params: &MarketParams<T>) -> Result<(T, T)> {
    if w.len() != params.k() {
        return Err(Error::Dimension(format!(
            "{} weights for {} assets",
            w.len(),
            params.k()
        )));
    }
    let x = dot(w.as_slice(), params.mu());
    let v = params.sigma().quad_form(w.as_slice());
    let v = if v < T::zero() { T::zero() } else { v };
    Ok((x, v))
}

/// Minimum-variance portfolio with mean `x_target`:
/// `w_GMV + ((x_target - R_GMV) / s) Q mu`.
pub fn markowitz_weights<T: Scalar>(
    x_target: T,
    constants: &FrontierConstants<T>,
) -> Result<Weights<T>> {
    constants.require_slope()?;
    let t = (x_target - constants.r_gmv) / constants.s;
    let w = (0..constants.k())
        .map(|i| constants.inv_one[i] * constants.v_gmv + t * constants.q_mu[i])
        .collect();
    Weights::new(w)
}

/// `(x - R_GMV)^2 / s + V_GMV`.
pub fn parabola_variance<T: Scalar>(x: T, constants: &FrontierConstants<T>) -> Result<T> {
    constants.require_slope()?;
    let d = x - constants.r_gmv;
    Ok(d * d / constants.s + constants.v_gmv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ExactRational;

    fn q(n: i128, d: i128) -> ExactRational {
        ExactRational::new(n, d)
    }

    fn worked_exact() -> MarketParams<ExactRational> {
        MarketParams::new(
            vec![q(105, 100), q(115, 100)],
            Matrix::diagonal(&[q(1, 100), q(4, 100)]),
        )
        .unwrap()
    }

    fn worked() -> MarketParams<f64> {
        MarketParams::new(vec![1.05, 1.15], Matrix::diagonal(&[0.01, 0.04])).unwrap()
    }

    #[test]
    fn worked_constants_exact() {
        let c = efficient_constants(&worked_exact());
        assert_eq!(c.a(), q(125, 1));
        assert_eq!(c.b(), q(535, 4));
        assert_eq!(c.c(), q(2293, 16));
        assert_eq!(c.r_gmv(), q(107, 100));
        assert_eq!(c.v_gmv(), q(1, 125));
        assert_eq!(c.s(), q(1, 5));
        assert_eq!(c.q_mu(), &[q(-2, 1), q(2, 1)]);
        assert_eq!(c.sharpe_return().unwrap(), q(2293, 2140));
    }

    #[test]
    fn worked_constants_f64() {
        let c = efficient_constants(&worked());
        assert!((c.r_gmv() - 1.07).abs() < 1e-14);
        assert!((c.v_gmv() - 0.008).abs() < 1e-16);
        assert!((c.s() - 0.2).abs() < 1e-12);
        assert!((c.sharpe_return().unwrap() - 143.3125 / 133.75).abs() < 1e-14);
    }

    #[test]
    fn worked_weights_exact() {
        let p = worked_exact();
        let g = gmv_weights(&p).unwrap();
        assert_eq!(g.as_slice(), &[q(4, 5), q(1, 5)]);
        let s = sharpe_weights(&p).unwrap();
        assert_eq!(s.as_slice(), &[q(420, 535), q(115, 535)]);
        let c = efficient_constants(&p);
        assert_eq!(markowitz_weights(c.r_gmv(), &c).unwrap(), g);
        assert_eq!(parabola_variance(c.r_gmv(), &c).unwrap(), c.v_gmv());
    }

    #[test]
    fn equal_means_give_zero_slope() {
        let sigma = Matrix::from_rows(&[vec![0.02, 0.004], vec![0.004, 0.03]]).unwrap();
        let p = MarketParams::new(vec![1.03, 1.03], sigma).unwrap();
        let c = efficient_constants(&p);
        assert!(c.s() < 1e-12);
        assert!(matches!(
            markowitz_weights(1.1, &c),
            Err(Error::DegenerateFrontier { .. })
        ));
        assert!(matches!(
            parabola_variance(1.1, &c),
            Err(Error::DegenerateFrontier { .. })
        ));
        let g = gmv_weights(&p).unwrap();
        let s = sharpe_weights(&p).unwrap();
        assert!(g.max_abs_diff(&s) < 1e-12);
    }

    #[test]
    fn identity_covariance_gmv_is_equal_weight() {
        let p = MarketParams::new(vec![1.0f64, 1.1, 1.2, 0.9], Matrix::identity(4)).unwrap();
        let g = gmv_weights(&p).unwrap();
        assert!(g.as_slice().iter().all(|&w| (w - 0.25).abs() < 1e-15));
    }

    #[test]
    fn unit_vector_moments() {
        let p = worked();
        let e1 = Weights::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(portfolio_moments(&e1, &p).unwrap(), (1.05, 0.01));
        let bad = Weights::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(portfolio_moments(&bad, &p), Err(Error::Dimension(_))));
    }

    #[test]
    fn sharpe_undefined_when_b_vanishes() {
        // 1'inv(S)mu = -10 + 10 = 0
        let p = MarketParams::new(vec![-0.1, 0.4], Matrix::diagonal(&[0.01, 0.04])).unwrap();
        assert_eq!(sharpe_weights(&p), Err(Error::SharpeUndefined));
    }

    #[test]
    fn weights_reject_bad_sum_and_nan() {
        assert!(matches!(Weights::new(vec![0.5, 0.5 + 1e-9]), Err(Error::WeightSum(_))));
        assert!(Weights::new(vec![0.5, 0.5 + 1e-11]).is_ok());
        assert_eq!(Weights::new(vec![f64::NAN, 1.0]), Err(Error::NonFiniteWeight));
    }

    #[test]
    fn worked_markowitz_point() {
        let c = efficient_constants(&worked());
        let x = 1.157942;
        let w = markowitz_weights(x, &c).unwrap();
        assert!((w[0] + 0.07942).abs() < 1e-12);
        assert!((w[1] - 1.07942).abs() < 1e-12);
        let v = parabola_variance(x, &c).unwrap();
        let (xm, vm) = portfolio_moments(&w, &worked()).unwrap();
        assert!((xm - x).abs() < 1e-12);
        assert!((vm - v).abs() / v < 1e-12);
        assert!((v - (0.087942f64.powi(2) / 0.2 + 0.008)).abs() < 1e-14);
    }

    #[test]
    fn f32_matches_f64() {
        let p = MarketParams::new(vec![1.05f32, 1.15], Matrix::diagonal(&[0.01f32, 0.04])).unwrap();
        let c = efficient_constants(&p);
        assert!((c.r_gmv() - 1.07).abs() < 1e-5);
        assert!((c.s() - 0.2).abs() < 1e-4);
    }
}
