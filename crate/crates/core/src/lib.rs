//! Optimal portfolios for power and logarithmic utility when the portfolio's
//! gross return is approximated by a log-normal law with matched moments.
//!
//! The modules build on each other in order: [`market`] estimates `(mu, Sigma)`
//! of gross returns, [`frontier`] derives the efficient-set constants,
//! [`crra`] evaluates the closed-form optima, and [`oracle`] checks them by
//! brute-force maximization. [`lognormal`] and [`stats`] hold the
//! distributional helpers.

// `!(x > 0)` is how NaN gets rejected alongside non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod crra;
pub mod error;
pub mod frontier;
pub mod linalg;
pub mod lognormal;
pub mod market;
pub mod oracle;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::{Real, Scalar};

/// Exact rational scalar for rounding-free frontier algebra.
pub type ExactRational = num_rational::Ratio<i128>;

pub type Market = market::MarketParams<f64>;
pub type Frontier = frontier::FrontierConstants<f64>;
pub type PortfolioWeights = frontier::Weights<f64>;
pub type Solution = crra::CrraSolution<f64>;
pub type LogNormal = lognormal::LogNormalParams<f64>;
pub type Returns = market::ReturnMatrix<f64>;
