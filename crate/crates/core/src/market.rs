//! Return data ingestion and estimation of the market parameters.
//!
//! Everything downstream of this module speaks gross returns `R = 1 + r`:
//! [`MarketParams::mu`] is `E(R)` and [`MarketParams::sigma`] is `Var(R)`.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Ldlt, Matrix};
use crate::scalar::Scalar;

/// Relative symmetry tolerance for covariance matrices.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Periods x assets matrix of simple returns.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnMatrix<T = f64> {
    values: Matrix<T>,
    asset_labels: Vec<String>,
}

impl<T: Scalar> ReturnMatrix<T> {
    /// Validates shape and finiteness. Missing labels default to `A0, A1, ...`.
    pub fn new(values: Matrix<T>, asset_labels: Option<Vec<String>>) -> Result<Self> {
        if values.rows() == 0 {
            return Err(Error::NoData);
        }
        if values.rows() < 2 {
            return Err(Error::TooFewPeriods(values.rows()));
        }
        if values.cols() < 2 {
            return Err(Error::TooFewAssets(values.cols()));
        }
        for i in 0..values.rows() {
            for j in 0..values.cols() {
                if !values[(i, j)].is_finite_value() {
                    return Err(Error::NonFinite { row: i, column: j });
                }
            }
        }
        let asset_labels = match asset_labels {
            Some(labels) if labels.len() != values.cols() => {
                return Err(Error::Dimension(format!(
                    "{} labels for {} assets",
                    labels.len(),
                    values.cols()
                )))
            }
            Some(labels) => labels,
            None => default_labels(values.cols()),
        };
        Ok(Self {
            values,
            asset_labels,
        })
    }

    pub fn n_periods(&self) -> usize {
        self.values.rows()
    }

    pub fn n_assets(&self) -> usize {
        self.values.cols()
    }

    pub fn values(&self) -> &Matrix<T> {
        &self.values
    }

    pub fn asset_labels(&self) -> &[String] {
        &self.asset_labels
    }

    /// Gross return `1 + r` of period `t`, asset `j`.
    pub fn gross(&self, t: usize, j: usize) -> T {
        T::one() + self.values[(t, j)]
    }

    /// Keeps the listed asset columns, in the given order.
    pub fn select_assets(&self, indices: &[usize]) -> Result<Self> {
        check_indices(indices, self.n_assets())?;
        let n = self.n_periods();
        let mut data = Vec::with_capacity(n * indices.len());
        for t in 0..n {
            data.extend(indices.iter().map(|&j| self.values[(t, j)]));
        }
        let values = Matrix::from_row_major(n, indices.len(), data)?;
        let labels = indices
            .iter()
            .map(|&j| self.asset_labels[j].clone())
            .collect();
        Self::new(values, Some(labels))
    }
}

fn default_labels(k: usize) -> Vec<String> {
    (0..k).map(|j| format!("A{j}")).collect()
}

/// CSV dialect for [`load_returns_csv`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvOptions {
    pub delimiter: u8,
    /// `None` detects a header: the first row is a header if any of its cells
    /// fails to parse as a number.
    pub has_header: Option<bool>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            has_header: None,
        }
    }
}

/// Reads one row per period, one column per asset, simple returns.
pub fn load_returns_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<ReturnMatrix<f64>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_returns_csv(file, options).map_err(|e| match e {
        Error::Io { message, .. } => Error::Io {
            path: path.display().to_string(),
            message,
        },
        other => other,
    })
}

pub fn parse_returns_csv<R: Read>(reader: R, options: &CsvOptions) -> Result<ReturnMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut records = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Io {
            path: String::from("<reader>"),
            message: e.to_string(),
        })?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        records.push((line + 1, rec));
    }
    let Some((_, first)) = records.first() else {
        return Err(Error::NoData);
    };
    let header = match options.has_header {
        Some(h) => h,
        None => first.iter().any(|c| c.parse::<f64>().is_err()),
    };
    let labels = header.then(|| first.iter().map(str::to_owned).collect::<Vec<_>>());
    let body = if header { &records[1..] } else { &records[..] };
    if body.is_empty() {
        return Err(Error::NoData);
    }

    let width = labels.as_ref().map_or(body[0].1.len(), Vec::len);
    let mut data = Vec::with_capacity(body.len() * width);
    for (line, rec) in body {
        if rec.len() != width {
            return Err(Error::RaggedRow {
                row: *line,
                expected: width,
                found: rec.len(),
            });
        }
        for (col, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
                row: *line,
                column: col + 1,
                value: cell.to_owned(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: *line,
                    column: col + 1,
                });
            }
            data.push(v);
        }
    }
    let values = Matrix::from_row_major(body.len(), width, data)?;
    ReturnMatrix::new(values, labels)
}

/// Mean vector and covariance matrix of gross returns, with the covariance
/// factorization cached.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketParams<T> {
    mu: Vec<T>,
    sigma: Matrix<T>,
    factor: Ldlt<T>,
}

impl<T: Scalar> MarketParams<T> {
    /// Validates dimensions, symmetry (relative `1e-10`) and positive
    /// definiteness of `sigma`.
    pub fn new(mu: Vec<T>, sigma: Matrix<T>) -> Result<Self> {
        let k = mu.len();
        if k < 2 {
            return Err(Error::TooFewAssets(k));
        }
        if sigma.rows() != k || sigma.cols() != k {
            return Err(Error::Dimension(format!(
                "mu has {k} entries but sigma is {}x{}",
                sigma.rows(),
                sigma.cols()
            )));
        }
        if mu.iter().any(|m| !m.is_finite_value())
            || sigma.as_slice().iter().any(|s| !s.is_finite_value())
        {
            return Err(Error::NonFinite { row: 0, column: 0 });
        }
        if sigma.asymmetry() > T::tol(SYMMETRY_TOL) {
            return Err(Error::NotSymmetric);
        }
        let factor = Ldlt::factor(&sigma)?;
        Ok(Self { mu, sigma, factor })
    }

    pub fn k(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[T] {
        &self.mu
    }

    pub fn sigma(&self) -> &Matrix<T> {
        &self.sigma
    }

    pub fn factor(&self) -> &Ldlt<T> {
        &self.factor
    }

    /// `inv(Sigma) b` through the cached factorization.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        self.factor.solve(b)
    }

    /// Same market with `Sigma` multiplied by `t`.
    pub fn with_scaled_covariance(&self, t: T) -> Result<Self> {
        Self::new(self.mu.clone(), self.sigma.scale(t))
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        subset(self, indices)
    }
}

fn check_indices(indices: &[usize], k: usize) -> Result<()> {
    if indices.len() < 2 {
        return Err(Error::InvalidSubset(format!(
            "need at least 2 assets, got {}",
            indices.len()
        )));
    }
    let mut seen = HashSet::with_capacity(indices.len());
    for &i in indices {
        if i >= k {
            return Err(Error::InvalidSubset(format!(
                "index {i} out of range for {k} assets"
            )));
        }
        if !seen.insert(i) {
            return Err(Error::InvalidSubset(format!("duplicate index {i}")));
        }
    }
    Ok(())
}

/// Sample mean of gross returns and unbiased (`n - 1`) sample covariance.
pub fn estimate_params<T: Scalar>(returns: &ReturnMatrix<T>) -> Result<MarketParams<T>> {
    let n = returns.n_periods();
    let k = returns.n_assets();
    let values = returns.values();
    let n_t = T::of_usize(n);

    let mean_r: Vec<T> = (0..k)
        .map(|j| (0..n).fold(T::zero(), |acc, t| acc + values[(t, j)]) / n_t)
        .collect();

    let denom = T::of_usize(n - 1);
    let mut sigma = Matrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let cov = (0..n).fold(T::zero(), |acc, t| {
                acc + (values[(t, a)] - mean_r[a]) * (values[(t, b)] - mean_r[b])
            }) / denom;
            sigma[(a, b)] = cov;
            sigma[(b, a)] = cov;
        }
    }
    let mu = mean_r.into_iter().map(|m| T::one() + m).collect();
    MarketParams::new(mu, sigma)
}

/// Restriction of `params` to the listed assets, in the given order.
pub fn subset<T: Scalar>(params: &MarketParams<T>, indices: &[usize]) -> Result<MarketParams<T>> {
    check_indices(indices, params.k())?;
    let mu = indices.iter().map(|&i| params.mu[i]).collect();
    let sigma = params.sigma.principal_submatrix(indices);
    MarketParams::new(mu, sigma)
}

/// Multivariate normal market used in place of real return data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    /// Number of assets `k`.
    pub k: usize,
    /// Number of periods `n`.
    pub n: usize,
    /// Mean gross returns.
    pub mu0: Vec<f64>,
    /// Covariance of returns (rows).
    pub sigma0: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl SynthSpec {
    pub fn params(&self) -> Result<MarketParams<f64>> {
        if self.k < 2 {
            return Err(Error::TooFewAssets(self.k));
        }
        if self.mu0.len() != self.k {
            return Err(Error::Dimension(format!(
                "mu0 has {} entries, k = {}",
                self.mu0.len(),
                self.k
            )));
        }
        MarketParams::new(self.mu0.clone(), Matrix::from_rows(&self.sigma0)?)
    }
}

/// `n` i.i.d. normal return rows with mean `mu0 - 1` and covariance `sigma0`.
pub fn synth_market(spec: &SynthSpec, seed: u64) -> Result<ReturnMatrix<f64>> {
    let params = spec.params()?;
    if spec.n < 2 {
        return Err(Error::TooFewPeriods(spec.n));
    }
    let chol = params.factor().cholesky_lower();
    let k = spec.k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(spec.n * k);
    let mut z = vec![0.0; k];
    for _ in 0..spec.n {
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(&mut rng);
        }
        for i in 0..k {
            let shock: f64 = (0..=i).map(|j| chol[(i, j)] * z[j]).sum();
            data.push(spec.mu0[i] - 1.0 + shock);
        }
    }
    let values = Matrix::from_row_major(spec.n, k, data)?;
    ReturnMatrix::new(values, spec.labels.clone())
}

/// Seeded random market: means `1 + U(0, 0.12)`, volatilities `U(0.1, 0.3)`
/// and a random correlation matrix.
pub fn random_market(k: usize, seed: u64) -> Result<MarketParams<f64>> {
    if k < 2 {
        return Err(Error::TooFewAssets(k));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mu: Vec<f64> = (0..k).map(|_| 1.0 + rng.random_range(0.0..0.12)).collect();
    let vol: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..0.3)).collect();
    let g: Vec<f64> = (0..k * k).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut c = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let v: f64 = (0..k).map(|t| g[i * k + t] * g[j * k + t]).sum::<f64>() / k as f64;
            c[(i, j)] = v + if i == j { 0.5 } else { 0.0 };
        }
    }
    let mut sigma = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let corr = c[(i, j)] / (c[(i, i)] * c[(j, j)]).sqrt();
            sigma[(i, j)] = corr * vol[i] * vol[j];
        }
    }
    MarketParams::new(mu, sigma)
}
