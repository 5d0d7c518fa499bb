//! Study configuration, input loading, and list-valued flag parsing.

use std::fs;
use std::path::{Path, PathBuf};

use crra_core::linalg::Matrix;
use crra_core::market::{load_returns_csv, synth_market, CsvOptions, SynthSpec};
use crra_core::{Market, Returns};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_SUBSET_CAP: usize = 200;
pub const DEFAULT_K_RANGE: &str = "4-14";
pub const DEFAULT_GAMMAS: &str = "0.25,0.5,0.75,1,2,3,4,5,6,7,8,9,10";
pub const DEFAULT_QUANTILES: &str = "0.1,0.25,0.5";

/// Where the return matrix comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    Csv { path: PathBuf },
    /// Multivariate normal returns drawn from a spec file with the study seed.
    Synth { spec: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub source: DataSource,
    pub seed: u64,
    pub k_range: Vec<usize>,
    pub gamma_grid: Vec<f64>,
    pub n_subsets_cap: usize,
    pub w0: f64,
    pub output_dir: PathBuf,
    pub quantiles: Vec<f64>,
}

impl StudyConfig {
    /// Checks everything that does not depend on the data.
    pub fn validate(&self) -> CliResult<()> {
        if self.k_range.is_empty() {
            return Err(CliError::Config("k_range is empty".into()));
        }
        if self.k_range.windows(2).any(|p| p[0] >= p[1]) {
            return Err(CliError::Config("k_range must be strictly increasing".into()));
        }
        if self.k_range[0] < 2 {
            return Err(CliError::Config("k_range entries must be at least 2".into()));
        }
        if self.gamma_grid.is_empty() {
            return Err(CliError::Config("gamma grid is empty".into()));
        }
        if self.gamma_grid.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(CliError::Config("gamma grid must be positive and finite".into()));
        }
        if self.gamma_grid.windows(2).any(|p| p[0] >= p[1]) {
            return Err(CliError::Config("gamma grid must be strictly increasing".into()));
        }
        if self.n_subsets_cap < 1 {
            return Err(CliError::Config("subset cap must be at least 1".into()));
        }
        if !(self.w0.is_finite() && self.w0 > 0.0) {
            return Err(CliError::Config("w0 must be positive".into()));
        }
        if self.quantiles.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return Err(CliError::Config("quantiles must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn validate_for(&self, n_assets: usize) -> CliResult<()> {
        self.validate()?;
        let top = *self.k_range.last().unwrap();
        if top > n_assets {
            return Err(CliError::Config(format!(
                "k = {top} exceeds the {n_assets} available assets"
            )));
        }
        Ok(())
    }

    pub fn load_returns(&self) -> CliResult<Returns> {
        match &self.source {
            DataSource::Csv { path } => Ok(load_returns_csv(path, &CsvOptions::default())?),
            DataSource::Synth { spec } => {
                let spec: SynthSpec = read_json(spec)?;
                Ok(synth_market(&spec, self.seed)?)
            }
        }
    }
}

/// `mu` and `sigma` of gross returns, as read by `solve`, `frontier` and
/// `verify`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarketFile {
    pub mu: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl MarketFile {
    pub fn params(&self) -> CliResult<Market> {
        Ok(Market::new(self.mu.clone(), Matrix::from_rows(&self.sigma)?)?)
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Json {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Comma-separated integers and inclusive ranges: `4-14`, `2,4,8`, `2-4,10`.
pub fn parse_k_range(s: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::Config(format!("cannot parse k range {s:?}"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let a: usize = a.trim().parse().map_err(|_| bad())?;
                let b: usize = b.trim().parse().map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

pub fn parse_f64_list(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| CliError::Config(format!("not a number: {p:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> StudyConfig {
        StudyConfig {
            source: DataSource::Synth { spec: "x.json".into() },
            seed: 1,
            k_range: vec![4, 5],
            gamma_grid: vec![2.0, 3.0],
            n_subsets_cap: 10,
            w0: 1.0,
            output_dir: "out".into(),
            quantiles: vec![0.25],
        }
    }

    #[test]
    fn k_range_forms() {
        assert_eq!(parse_k_range("4-7").unwrap(), vec![4, 5, 6, 7]);
        assert_eq!(parse_k_range("8, 2,3-4").unwrap(), vec![2, 3, 4, 8]);
        assert!(parse_k_range("5-3").is_err());
        assert!(parse_k_range("a").is_err());
        assert!(parse_k_range("").is_err());
    }

    #[test]
    fn float_lists() {
        assert_eq!(parse_f64_list("1, 2.5,1e1").unwrap(), vec![1.0, 2.5, 10.0]);
        assert!(parse_f64_list("1,x").is_err());
    }

    #[test]
    fn validation() {
        assert!(cfg().validate().is_ok());
        assert!(cfg().validate_for(4).is_err());
        let mut c = cfg();
        c.gamma_grid = vec![0.0];
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.k_range = vec![1, 2];
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.n_subsets_cap = 0;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.quantiles = vec![1.5];
        assert!(c.validate().is_err());
    }

    #[test]
    fn source_json_shape() {
        let s = serde_json::to_string(&DataSource::Csv { path: "r.csv".into() }).unwrap();
        assert_eq!(s, r#"{"kind":"csv","path":"r.csv"}"#);
    }
}
