//! Subset study over a return history: existence and efficiency rates of the
//! closed-form optimum, a log-normality screen of its realized returns, and a
//! utility comparison against the naive and Sharpe portfolios.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use crra_core::crra::{gamma_min, is_mv_efficient_power, objective_value, power_solution_with};
use crra_core::frontier::{efficient_constants, gmv_weights, portfolio_moments, sharpe_weights};
use crra_core::market::estimate_params;
use crra_core::stats::{empirical_cdf, quantile, shapiro_wilk};
use crra_core::{Market, PortfolioWeights, Returns};
use itertools::Itertools;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{DataSource, StudyConfig};
use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

pub const CELLS_CSV: &str = "cells.csv";
pub const FAILURE_RATES_CSV: &str = "failure_rates.csv";
pub const PVALUE_QUANTILES_CSV: &str = "pvalue_quantiles.csv";
pub const FRONTIER_LOCATIONS_CSV: &str = "frontier_locations.csv";
pub const STRATEGY_ECDF_CSV: &str = "strategy_ecdf.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const RUN_META_JSON: &str = "run_meta.json";

const NON_POSITIVE_GROSS_RETURN: &str = "non_positive_gross_return";
const NON_FINITE_UTILITY: &str = "non_finite_utility";

/// One subset at one `gamma`. Every missing value has an error code in the
/// matching `*_error` column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRow {
    pub k: usize,
    pub subset: usize,
    /// Zero-based asset columns joined by `;`.
    pub assets: String,
    pub gamma: f64,
    pub gamma_min: Option<f64>,
    pub r_gmv: Option<f64>,
    pub s: Option<f64>,
    pub below_gamma_min: Option<bool>,
    /// `gamma < gamma_min` or `R_GMV <= 0`.
    pub not_efficient: Option<bool>,
    pub x: Option<f64>,
    pub v: Option<f64>,
    pub eu_optimal: Option<f64>,
    pub eu_naive: Option<f64>,
    pub eu_sharpe: Option<f64>,
    pub sw_statistic: Option<f64>,
    pub sw_p_value: Option<f64>,
    pub solve_error: Option<&'static str>,
    pub screen_error: Option<&'static str>,
    pub naive_error: Option<&'static str>,
    pub sharpe_error: Option<&'static str>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureRow {
    pub k: usize,
    pub gamma: f64,
    pub n_subsets: usize,
    /// Subsets where `gamma_min` could be computed.
    pub n_defined: usize,
    pub rate_below_gamma_min: Option<f64>,
    pub rate_not_efficient: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileRow {
    pub k: usize,
    pub gamma: f64,
    pub quantile: f64,
    pub p_value: Option<f64>,
    pub n_screened: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocationRow {
    pub k: usize,
    pub gamma: f64,
    pub portfolio: &'static str,
    pub x: Option<f64>,
    pub v: Option<f64>,
    pub error: Option<&'static str>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EcdfRow {
    pub k: usize,
    pub gamma: f64,
    pub strategy: &'static str,
    pub utility: f64,
    pub ecdf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileValue {
    pub q: f64,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub k: usize,
    pub gamma: f64,
    pub n_subsets: usize,
    pub n_defined: usize,
    pub rate_below_gamma_min: Option<f64>,
    pub rate_not_efficient: Option<f64>,
    pub n_screened: usize,
    pub p_value_quantiles: Vec<QuantileValue>,
    /// Subsets where all three strategy utilities exist.
    pub n_compared: usize,
    pub optimal_dominates_naive: Option<bool>,
    pub optimal_dominates_sharpe: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetDraw {
    pub k: usize,
    pub n_possible: u128,
    pub n_drawn: usize,
    pub exhaustive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetSampling {
    pub method: &'static str,
    pub cap: usize,
    pub per_k: Vec<SubsetDraw>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataInfo {
    pub n_periods: usize,
    pub n_assets: usize,
    pub asset_labels: Vec<String>,
}

/// Configuration as echoed in the summary; the output directory is left to
/// the run metadata so that reruns elsewhere compare equal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub source: DataSource,
    pub seed: u64,
    pub k_range: Vec<usize>,
    pub gamma_grid: Vec<f64>,
    pub n_subsets_cap: usize,
    pub w0: f64,
    pub quantiles: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Checks {
    pub failure_rate_non_increasing_in_gamma: bool,
    pub optimal_dominates_naive: bool,
    pub optimal_dominates_sharpe: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub config: ConfigEcho,
    pub data: DataInfo,
    pub subset_sampling: SubsetSampling,
    pub cells: Vec<CellSummary>,
    pub error_counts: BTreeMap<&'static str, usize>,
    pub checks: Checks,
    pub files: Vec<&'static str>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub summary: Summary,
    pub cells: Vec<CellRow>,
    pub failure_rates: Vec<FailureRow>,
    pub pvalue_quantiles: Vec<QuantileRow>,
    pub frontier_locations: Vec<LocationRow>,
    pub strategy_ecdf: Vec<EcdfRow>,
}

#[derive(Debug, Clone, Serialize)]
struct RunMeta<'a> {
    schema_version: u32,
    started_at: String,
    finished_at: String,
    output_dir: &'a Path,
    tool_version: &'static str,
}

/// Loads the data, runs every cell, and writes the report files into
/// `cfg.output_dir`.
pub fn run_study(cfg: &StudyConfig) -> CliResult<StudyReport> {
    let started_at = chrono::Utc::now().to_rfc3339();
    cfg.validate()?;
    let returns = cfg.load_returns()?;
    let report = study_returns(cfg, &returns)?;
    write_report(&report, &cfg.output_dir)?;
    let meta = RunMeta {
        schema_version: SCHEMA_VERSION,
        started_at,
        finished_at: chrono::Utc::now().to_rfc3339(),
        output_dir: &cfg.output_dir,
        tool_version: env!("CARGO_PKG_VERSION"),
    };
    write_json(&cfg.output_dir.join(RUN_META_JSON), &meta)?;
    Ok(report)
}

/// The study on an in-memory return matrix; touches no files.
pub fn study_returns(cfg: &StudyConfig, returns: &Returns) -> CliResult<StudyReport> {
    cfg.validate_for(returns.n_assets())?;
    let full = estimate_params(returns)?;
    let n = returns.n_assets();

    let mut draws = Vec::with_capacity(cfg.k_range.len());
    let mut jobs = Vec::new();
    for &k in &cfg.k_range {
        let (subsets, n_possible) = draw_subsets(n, k, cfg.n_subsets_cap, cfg.seed);
        draws.push(SubsetDraw {
            k,
            n_possible,
            n_drawn: subsets.len(),
            exhaustive: n_possible <= cfg.n_subsets_cap as u128,
        });
        jobs.extend(subsets.into_iter().enumerate().map(|(i, s)| (k, i, s)));
    }

    let cells: Vec<CellRow> = jobs
        .par_iter()
        .map(|(k, i, assets)| evaluate_subset(returns, &full, *k, *i, assets, cfg))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    let mut groups: BTreeMap<(usize, usize), Vec<&CellRow>> = BTreeMap::new();
    for c in &cells {
        let gi = cfg.gamma_grid.iter().position(|&g| g == c.gamma).unwrap_or(0);
        groups.entry((c.k, gi)).or_default().push(c);
    }

    let mut failure_rates = Vec::new();
    let mut pvalue_quantiles = Vec::new();
    let mut strategy_ecdf = Vec::new();
    let mut summaries = Vec::new();
    for ((k, gi), group) in &groups {
        let gamma = cfg.gamma_grid[*gi];
        let s = summarize_cell(*k, gamma, group, cfg, &mut strategy_ecdf);
        failure_rates.push(FailureRow {
            k: *k,
            gamma,
            n_subsets: s.n_subsets,
            n_defined: s.n_defined,
            rate_below_gamma_min: s.rate_below_gamma_min,
            rate_not_efficient: s.rate_not_efficient,
        });
        for qv in &s.p_value_quantiles {
            pvalue_quantiles.push(QuantileRow {
                k: *k,
                gamma,
                quantile: qv.q,
                p_value: qv.p_value,
                n_screened: s.n_screened,
            });
        }
        summaries.push(s);
    }

    let frontier_locations = frontier_locations(&full, cfg);
    let checks = checks(&summaries, &cfg.k_range);

    let mut error_counts: BTreeMap<&'static str, usize> = BTreeMap::new();
    for c in &cells {
        for code in [c.solve_error, c.screen_error, c.naive_error, c.sharpe_error]
            .into_iter()
            .flatten()
        {
            *error_counts.entry(code).or_default() += 1;
        }
    }

    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        config: ConfigEcho {
            source: cfg.source.clone(),
            seed: cfg.seed,
            k_range: cfg.k_range.clone(),
            gamma_grid: cfg.gamma_grid.clone(),
            n_subsets_cap: cfg.n_subsets_cap,
            w0: cfg.w0,
            quantiles: cfg.quantiles.clone(),
        },
        data: DataInfo {
            n_periods: returns.n_periods(),
            n_assets: n,
            asset_labels: returns.asset_labels().to_vec(),
        },
        subset_sampling: SubsetSampling {
            method: "all subsets when C(n,k) <= cap, otherwise cap distinct subsets \
                     sampled without replacement (ChaCha8, stream k)",
            cap: cfg.n_subsets_cap,
            per_k: draws,
        },
        cells: summaries,
        error_counts,
        checks,
        files: vec![
            CELLS_CSV,
            FAILURE_RATES_CSV,
            PVALUE_QUANTILES_CSV,
            FRONTIER_LOCATIONS_CSV,
            STRATEGY_ECDF_CSV,
            SUMMARY_JSON,
            RUN_META_JSON,
        ],
    };

    Ok(StudyReport {
        summary,
        cells,
        failure_rates,
        pvalue_quantiles,
        frontier_locations,
        strategy_ecdf,
    })
}

/// Up to `cap` distinct sorted `k`-subsets of `0..n`, and `C(n, k)`.
pub fn draw_subsets(n: usize, k: usize, cap: usize, seed: u64) -> (Vec<Vec<usize>>, u128) {
    let n_possible = binomial(n, k);
    if n_possible <= cap as u128 {
        return ((0..n).combinations(k).collect(), n_possible);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    let mut seen = HashSet::with_capacity(cap);
    let mut out = Vec::with_capacity(cap);
    while out.len() < cap {
        let mut s = rand::seq::index::sample(&mut rng, n, k).into_vec();
        s.sort_unstable();
        if seen.insert(s.clone()) {
            out.push(s);
        }
    }
    (out, n_possible)
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    c
}

fn finite(u: crra_core::Result<f64>) -> Result<f64, &'static str> {
    match u {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(NON_FINITE_UTILITY),
        Err(e) => Err(e.code()),
    }
}

fn split<T>(r: Result<T, &'static str>) -> (Option<T>, Option<&'static str>) {
    match r {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e)),
    }
}

/// `ln(w' R_t)` for every period, on the gross returns of `assets`.
fn realized_log_returns(
    returns: &Returns,
    assets: &[usize],
    w: &PortfolioWeights,
) -> Result<Vec<f64>, &'static str> {
    (0..returns.n_periods())
        .map(|t| {
            let g: f64 = assets
                .iter()
                .zip(w.as_slice())
                .map(|(&j, &wj)| wj * returns.gross(t, j))
                .sum();
            if g > 0.0 {
                Ok(g.ln())
            } else {
                Err(NON_POSITIVE_GROSS_RETURN)
            }
        })
        .collect()
}

fn evaluate_subset(
    returns: &Returns,
    full: &Market,
    k: usize,
    index: usize,
    assets: &[usize],
    cfg: &StudyConfig,
) -> Vec<CellRow> {
    let label = assets.iter().map(|a| a.to_string()).join(";");
    let blank = |gamma: f64| CellRow {
        k,
        subset: index,
        assets: label.clone(),
        gamma,
        gamma_min: None,
        r_gmv: None,
        s: None,
        below_gamma_min: None,
        not_efficient: None,
        x: None,
        v: None,
        eu_optimal: None,
        eu_naive: None,
        eu_sharpe: None,
        sw_statistic: None,
        sw_p_value: None,
        solve_error: None,
        screen_error: None,
        naive_error: None,
        sharpe_error: None,
    };

    let params = match full.subset(assets) {
        Ok(p) => p,
        Err(e) => {
            let code = e.code();
            return cfg
                .gamma_grid
                .iter()
                .map(|&g| CellRow {
                    solve_error: Some(code),
                    screen_error: Some(code),
                    naive_error: Some(code),
                    sharpe_error: Some(code),
                    ..blank(g)
                })
                .collect();
        }
    };
    let constants = efficient_constants(&params);
    let g_min = gamma_min(&constants);
    let naive = PortfolioWeights::equal(k);
    let sharpe = sharpe_weights(&params);

    cfg.gamma_grid
        .iter()
        .map(|&gamma| {
            let mut row = blank(gamma);
            row.r_gmv = Some(constants.r_gmv());
            row.s = Some(constants.s());
            if let Ok(gm) = g_min {
                row.gamma_min = Some(gm);
                row.below_gamma_min = Some(gamma < gm);
                row.not_efficient = Some(!is_mv_efficient_power(gamma, &constants));
            }

            let (eu_naive, naive_error) = split(match &naive {
                Ok(w) => finite(objective_value(w, &params, gamma, cfg.w0)),
                Err(e) => Err(e.code()),
            });
            row.eu_naive = eu_naive;
            row.naive_error = naive_error;
            let (eu_sharpe, sharpe_error) = split(match &sharpe {
                Ok(w) => finite(objective_value(w, &params, gamma, cfg.w0)),
                Err(e) => Err(e.code()),
            });
            row.eu_sharpe = eu_sharpe;
            row.sharpe_error = sharpe_error;

            match power_solution_with(gamma, &constants, cfg.w0) {
                Ok(sol) => {
                    row.x = Some(sol.x);
                    row.v = Some(sol.v);
                    let (eu, err) = split(finite(Ok(sol.expected_utility)));
                    row.eu_optimal = eu;
                    row.solve_error = err;
                    let screen = realized_log_returns(returns, assets, &sol.weights)
                        .and_then(|logs| shapiro_wilk(&logs).map_err(|e| e.code()));
                    match screen {
                        Ok(t) => {
                            row.sw_statistic = Some(t.statistic);
                            row.sw_p_value = Some(t.p_value);
                        }
                        Err(code) => row.screen_error = Some(code),
                    }
                }
                Err(e) => {
                    row.solve_error = Some(e.code());
                    row.screen_error = Some(e.code());
                }
            }
            row
        })
        .collect()
}

fn rate(hits: usize, n: usize) -> Option<f64> {
    (n > 0).then(|| hits as f64 / n as f64)
}

/// `F_a(x) <= F_b(x)` at every jump point of either step function.
fn ecdf_dominates(a: &[f64], b: &[f64]) -> bool {
    let (Ok(fa), Ok(fb)) = (empirical_cdf(a), empirical_cdf(b)) else {
        return false;
    };
    a.iter().chain(b).all(|&x| fa.eval(x) <= fb.eval(x))
}

fn summarize_cell(
    k: usize,
    gamma: f64,
    group: &[&CellRow],
    cfg: &StudyConfig,
    ecdf_rows: &mut Vec<EcdfRow>,
) -> CellSummary {
    let defined: Vec<&&CellRow> = group.iter().filter(|c| c.gamma_min.is_some()).collect();
    let below = defined.iter().filter(|c| c.below_gamma_min == Some(true)).count();
    let not_eff = defined.iter().filter(|c| c.not_efficient == Some(true)).count();

    let pvals: Vec<f64> = group.iter().filter_map(|c| c.sw_p_value).collect();
    let p_value_quantiles = cfg
        .quantiles
        .iter()
        .map(|&q| QuantileValue {
            q,
            p_value: quantile(&pvals, q).ok(),
        })
        .collect();

    let mut opt = Vec::new();
    let mut naive = Vec::new();
    let mut sharpe = Vec::new();
    for c in group {
        if let (Some(o), Some(n), Some(s)) = (c.eu_optimal, c.eu_naive, c.eu_sharpe) {
            opt.push(o);
            naive.push(n);
            sharpe.push(s);
        }
    }
    for (name, sample) in [("naive", &naive), ("sharpe", &sharpe), ("optimal", &opt)] {
        if let Ok(f) = empirical_cdf(sample) {
            for &u in f.support() {
                ecdf_rows.push(EcdfRow {
                    k,
                    gamma,
                    strategy: name,
                    utility: u,
                    ecdf: f.eval(u),
                });
            }
        }
    }
    let compared = !opt.is_empty();

    CellSummary {
        k,
        gamma,
        n_subsets: group.len(),
        n_defined: defined.len(),
        rate_below_gamma_min: rate(below, defined.len()),
        rate_not_efficient: rate(not_eff, defined.len()),
        n_screened: pvals.len(),
        p_value_quantiles,
        n_compared: opt.len(),
        optimal_dominates_naive: compared.then(|| ecdf_dominates(&opt, &naive)),
        optimal_dominates_sharpe: compared.then(|| ecdf_dominates(&opt, &sharpe)),
    }
}

/// `(X, V)` of the optimal, Sharpe and GMV portfolios of the first `k`
/// assets.
fn frontier_locations(full: &Market, cfg: &StudyConfig) -> Vec<LocationRow> {
    let mut rows = Vec::new();
    for &k in &cfg.k_range {
        let first: Vec<usize> = (0..k).collect();
        let params = full.subset(&first);
        for &gamma in &cfg.gamma_grid {
            let row = |portfolio, r: Result<(f64, f64), &'static str>| {
                let (xv, error) = split(r);
                LocationRow {
                    k,
                    gamma,
                    portfolio,
                    x: xv.map(|p| p.0),
                    v: xv.map(|p| p.1),
                    error,
                }
            };
            let Ok(p) = &params else {
                let code = params.as_ref().err().map_or("invalid_subset", |e| e.code());
                for name in ["optimal", "sharpe", "gmv"] {
                    rows.push(row(name, Err(code)));
                }
                continue;
            };
            let c = efficient_constants(p);
            let moments = |w: crra_core::Result<PortfolioWeights>| {
                w.and_then(|w| portfolio_moments(&w, p)).map_err(|e| e.code())
            };
            rows.push(row(
                "optimal",
                power_solution_with(gamma, &c, cfg.w0)
                    .map(|s| (s.x, s.v))
                    .map_err(|e| e.code()),
            ));
            rows.push(row("sharpe", moments(sharpe_weights(p))));
            rows.push(row("gmv", moments(gmv_weights(p))));
        }
    }
    rows
}

fn checks(cells: &[CellSummary], k_range: &[usize]) -> Checks {
    let non_increasing = k_range.iter().all(|&k| {
        let rates: Vec<f64> = cells
            .iter()
            .filter(|c| c.k == k)
            .filter_map(|c| c.rate_below_gamma_min)
            .collect();
        rates.windows(2).all(|p| p[1] <= p[0])
    });
    Checks {
        failure_rate_non_increasing_in_gamma: non_increasing,
        optimal_dominates_naive: cells.iter().all(|c| c.optimal_dominates_naive != Some(false)),
        optimal_dominates_sharpe: cells.iter().all(|c| c.optimal_dominates_sharpe != Some(false)),
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_report(report: &StudyReport, dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let p = |name: &str| -> PathBuf { dir.join(name) };
    write_csv(&p(CELLS_CSV), &report.cells)?;
    write_csv(&p(FAILURE_RATES_CSV), &report.failure_rates)?;
    write_csv(&p(PVALUE_QUANTILES_CSV), &report.pvalue_quantiles)?;
    write_csv(&p(FRONTIER_LOCATIONS_CSV), &report.frontier_locations)?;
    write_csv(&p(STRATEGY_ECDF_CSV), &report.strategy_ecdf)?;
    write_json(&p(SUMMARY_JSON), &report.summary)
}
