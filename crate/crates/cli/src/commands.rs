//! The single-shot subcommands. Each returns a serializable report; printing
//! and exit codes are left to the binary.

use std::io::Write;

use crra_core::crra::{gamma_min, power_solution_with};
use crra_core::frontier::{
    efficient_constants, gmv_weights, markowitz_weights, parabola_variance, portfolio_moments,
    sharpe_weights,
};
use crra_core::lognormal::{match_params, psi, psi_sup_bound, psi_sup_empirical};
use crra_core::market::{random_market, ReturnMatrix};
use crra_core::oracle::{maximize_numeric, OracleConfig};
use crra_core::stats::normal_cdf;
use crra_core::{Market, Solution};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const AGREEMENT_TOL_WEIGHTS: f64 = 1e-5;
pub const AGREEMENT_TOL_OBJECTIVE: f64 = 1e-9;
pub const PARABOLA_TOL: f64 = 1e-8;
pub const MARKOWITZ_TOL: f64 = 1e-10;
pub const DEFAULT_LADDER: &str = "0.2,0.1,0.05,0.01";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsReport {
    pub k: usize,
    pub r_gmv: f64,
    pub v_gmv: f64,
    pub s: f64,
    pub gamma_min: Option<f64>,
    pub sharpe_return: Option<f64>,
}

impl ConstantsReport {
    pub fn new(params: &Market) -> Self {
        let c = efficient_constants(params);
        Self {
            k: c.k(),
            r_gmv: c.r_gmv(),
            v_gmv: c.v_gmv(),
            s: c.s(),
            gamma_min: gamma_min(&c).ok(),
            sharpe_return: c.sharpe_return().ok(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionReport {
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub weights: Vec<f64>,
    /// `null` when it over- or underflows; see `expected_utility_error`.
    pub expected_utility: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_utility_error: Option<&'static str>,
    pub mv_efficient: bool,
}

impl From<&Solution> for SolutionReport {
    fn from(s: &Solution) -> Self {
        let finite = s.expected_utility.is_finite() && s.expected_utility != 0.0;
        Self {
            x: s.x,
            y: s.y,
            v: s.v,
            weights: s.weights.as_slice().to_vec(),
            expected_utility: finite.then_some(s.expected_utility),
            expected_utility_error: (!finite).then_some("non_finite_utility"),
            mv_efficient: s.mv_efficient,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub gamma: f64,
    pub w0: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
    pub constants: ConstantsReport,
    pub solution: SolutionReport,
}

pub fn solve(params: &Market, labels: Vec<String>, gamma: f64, w0: f64) -> CliResult<SolveReport> {
    let c = efficient_constants(params);
    let sol = power_solution_with(gamma, &c, w0)?;
    Ok(SolveReport {
        gamma,
        w0,
        labels,
        constants: ConstantsReport::new(params),
        solution: SolutionReport::from(&sol),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortfolioPoint {
    pub x: f64,
    pub v: f64,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierReport {
    pub constants: ConstantsReport,
    pub gmv: PortfolioPoint,
    pub sharpe: Option<PortfolioPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParabolaRow {
    pub x: f64,
    pub v: f64,
    pub efficient: bool,
}

/// Constants, the GMV and Sharpe portfolios, and `n_points` evenly spaced
/// points of the parabola over `[x_min, x_max]`.
pub fn frontier(
    params: &Market,
    x_min: f64,
    x_max: f64,
    n_points: usize,
) -> CliResult<(FrontierReport, Vec<ParabolaRow>)> {
    if !(x_min < x_max) || n_points < 2 {
        return Err(CliError::Config("need x_min < x_max and at least 2 points".into()));
    }
    let c = efficient_constants(params);
    c.require_slope()?;
    let point = |w: crra_core::PortfolioWeights| -> CliResult<PortfolioPoint> {
        let (x, v) = portfolio_moments(&w, params)?;
        Ok(PortfolioPoint { x, v, weights: w.into_vec() })
    };
    let gmv = point(gmv_weights(params)?)?;
    let sharpe = sharpe_weights(params).ok().map(point).transpose()?;
    let rows = (0..n_points)
        .map(|i| {
            let x = x_min + (x_max - x_min) * i as f64 / (n_points - 1) as f64;
            Ok(ParabolaRow {
                x,
                v: parabola_variance(x, &c)?,
                efficient: x >= c.r_gmv(),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok((
        FrontierReport {
            constants: ConstantsReport::new(params),
            gmv,
            sharpe,
        },
        rows,
    ))
}

/// Default plotting range: `R_GMV +/- 4 sqrt(s V_GMV)`, wide enough to show
/// both branches.
pub fn default_x_range(params: &Market) -> (f64, f64) {
    let c = efficient_constants(params);
    let half = 4.0 * (c.s() * c.v_gmv()).sqrt().max(1e-6);
    (c.r_gmv() - half, c.r_gmv() + half)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyRow {
    pub market: usize,
    pub k: usize,
    pub gamma: f64,
    pub gamma_min: Option<f64>,
    pub weight_gap: Option<f64>,
    pub objective_gap: Option<f64>,
    pub parabola_gap: Option<f64>,
    pub markowitz_gap: Option<f64>,
    pub n_runaway: Option<usize>,
    pub passed: bool,
    pub error: Option<&'static str>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub tol_weights: f64,
    pub tol_objective: f64,
    pub tol_parabola: f64,
    pub tol_markowitz: f64,
    pub n_cells: usize,
    pub n_failed: usize,
    pub worst_weight_gap: f64,
    pub worst_objective_gap: f64,
    pub worst_parabola_gap: f64,
    pub worst_markowitz_gap: f64,
    pub passed: bool,
    pub rows: Vec<VerifyRow>,
}

/// Markets to check: either one given market, or `n_markets` seeded random
/// ones cycling through `k_range`.
pub enum VerifyMarkets<'a> {
    Given(&'a Market),
    Random {
        n_markets: usize,
        k_range: &'a [usize],
        seed: u64,
    },
}

/// `gamma_min + 0.1` and the fixed grid `{2, 5, 20}`, keeping those at or
/// above `gamma_min`.
pub fn verify_gammas(g_min: f64) -> Vec<f64> {
    let mut g: Vec<f64> = [g_min + 0.1, 2.0, 5.0, 20.0]
        .into_iter()
        .filter(|&g| g >= g_min)
        .collect();
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

fn verify_one(market: usize, params: &Market, gammas: Option<&[f64]>, oracle: &OracleConfig) -> Vec<VerifyRow> {
    let c = efficient_constants(params);
    let k = params.k();
    let g_min = gamma_min(&c);
    let gammas = match (gammas, &g_min) {
        (Some(g), _) => g.to_vec(),
        (None, Ok(gm)) => verify_gammas(*gm),
        (None, Err(e)) => {
            return vec![VerifyRow {
                market,
                k,
                gamma: f64::NAN,
                gamma_min: None,
                weight_gap: None,
                objective_gap: None,
                parabola_gap: None,
                markowitz_gap: None,
                n_runaway: None,
                passed: false,
                error: Some(e.code()),
            }]
        }
    };
    gammas
        .into_iter()
        .map(|gamma| {
            let mut row = VerifyRow {
                market,
                k,
                gamma,
                gamma_min: g_min.as_ref().ok().copied(),
                weight_gap: None,
                objective_gap: None,
                parabola_gap: None,
                markowitz_gap: None,
                n_runaway: None,
                passed: false,
                error: None,
            };
            let cfg = OracleConfig { seed: oracle.seed.wrapping_add(market as u64), ..oracle.clone() };
            let checked = power_solution_with(gamma, &c, 1.0).and_then(|sol| {
                let num = maximize_numeric(params, gamma, &cfg)?;
                let mw = markowitz_weights(sol.x, &c)?;
                let on_parabola = parabola_variance(sol.x, &c)?;
                Ok((sol, num, mw, on_parabola))
            });
            match checked {
                Ok((sol, num, mw, pv)) => {
                    let wg = sol.weights.max_abs_diff(&num.weights);
                    let og = ((sol.expected_utility - num.objective) / sol.expected_utility).abs();
                    let pg = (sol.v - pv).abs() / pv;
                    let mg = sol.weights.max_abs_diff(&mw);
                    row.weight_gap = Some(wg);
                    row.objective_gap = Some(og);
                    row.parabola_gap = Some(pg);
                    row.markowitz_gap = Some(mg);
                    row.n_runaway = Some(num.n_runaway);
                    row.passed = wg <= AGREEMENT_TOL_WEIGHTS
                        && og <= AGREEMENT_TOL_OBJECTIVE
                        && pg <= PARABOLA_TOL
                        && mg <= MARKOWITZ_TOL;
                }
                Err(e) => row.error = Some(e.code()),
            }
            row
        })
        .collect()
}

/// Closed form against the numerical oracle, plus the parabola and
/// Markowitz-form checks, on every (market, gamma) cell.
pub fn verify(markets: VerifyMarkets<'_>, gammas: Option<&[f64]>, oracle: &OracleConfig) -> CliResult<VerifyReport> {
    let rows: Vec<VerifyRow> = match markets {
        VerifyMarkets::Given(p) => verify_one(0, p, gammas, oracle),
        VerifyMarkets::Random { n_markets, k_range, seed } => {
            if k_range.is_empty() || k_range[0] < 2 {
                return Err(CliError::Config("k range must start at 2 or more".into()));
            }
            (0..n_markets)
                .into_par_iter()
                .map(|m| {
                    let k = k_range[m % k_range.len()];
                    match random_market(k, seed.wrapping_add(m as u64)) {
                        Ok(p) => verify_one(m, &p, gammas, oracle),
                        Err(e) => vec![VerifyRow {
                            market: m,
                            k,
                            gamma: f64::NAN,
                            gamma_min: None,
                            weight_gap: None,
                            objective_gap: None,
                            parabola_gap: None,
                            markowitz_gap: None,
                            n_runaway: None,
                            passed: false,
                            error: Some(e.code()),
                        }],
                    }
                })
                .collect::<Vec<_>>()
                .into_iter()
                .flatten()
                .collect()
        }
    };
    let worst = |f: fn(&VerifyRow) -> Option<f64>| rows.iter().filter_map(f).fold(0.0, f64::max);
    let n_failed = rows.iter().filter(|r| !r.passed).count();
    Ok(VerifyReport {
        tol_weights: AGREEMENT_TOL_WEIGHTS,
        tol_objective: AGREEMENT_TOL_OBJECTIVE,
        tol_parabola: PARABOLA_TOL,
        tol_markowitz: MARKOWITZ_TOL,
        n_cells: rows.len(),
        n_failed,
        worst_weight_gap: worst(|r| r.weight_gap),
        worst_objective_gap: worst(|r| r.objective_gap),
        worst_parabola_gap: worst(|r| r.parabola_gap),
        worst_markowitz_gap: worst(|r| r.markowitz_gap),
        passed: n_failed == 0 && !rows.is_empty(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderRow {
    pub ratio: f64,
    pub empirical: f64,
    pub bound: f64,
    pub bound_over_ratio: f64,
}

/// `sup |psi|` on the grid and its analytic bound at `sigma = ratio * mu`.
pub fn lemma1(mu: f64, ratios: &[f64], n_grid: usize) -> CliResult<Vec<LadderRow>> {
    ratios
        .iter()
        .map(|&r| {
            let sigma = r * mu;
            Ok(LadderRow {
                ratio: r,
                empirical: psi_sup_empirical(mu, sigma, n_grid)?,
                bound: psi_sup_bound(mu, sigma)?,
                bound_over_ratio: psi_sup_bound(mu, sigma)? / r,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiCurveRow {
    pub ratio: f64,
    pub x: f64,
    pub normal_cdf: f64,
    pub lognormal_cdf: f64,
    pub psi: f64,
}

/// Both distribution functions and their difference on `mu (1 +/- 6 r)`.
pub fn psi_curve(mu: f64, ratios: &[f64], n_points: usize) -> CliResult<Vec<PsiCurveRow>> {
    let mut rows = Vec::with_capacity(ratios.len() * n_points);
    for &r in ratios {
        let sigma = r * mu;
        match_params(mu, sigma * sigma)?;
        let (lo, hi) = ((mu * (1.0 - 6.0 * r)).max(0.0), mu * (1.0 + 6.0 * r));
        for i in 0..n_points {
            let x = lo + (hi - lo) * i as f64 / (n_points.max(2) - 1) as f64;
            let n = normal_cdf((x - mu) / sigma);
            let p = psi(x, mu, sigma);
            rows.push(PsiCurveRow {
                ratio: r,
                x,
                normal_cdf: n,
                lognormal_cdf: n - p,
                psi: p,
            });
        }
    }
    Ok(rows)
}

/// Returns as CSV with a header row of asset labels.
pub fn write_returns_csv<W: Write>(returns: &ReturnMatrix<f64>, out: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::Io {
        path: "<output>".into(),
        message: e.to_string(),
    };
    w.write_record(returns.asset_labels()).map_err(io)?;
    for t in 0..returns.n_periods() {
        w.write_record(returns.values().row(t).iter().map(|v| v.to_string()))
            .map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io {
        path: "<output>".into(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crra_core::linalg::Matrix;

    fn worked() -> Market {
        Market::new(vec![1.05, 1.15], Matrix::diagonal(&[0.01, 0.04])).unwrap()
    }

    #[test]
    fn solve_worked_market() {
        let r = solve(&worked(), vec![], 3.0, 1.0).unwrap();
        assert!((r.solution.x - 1.1579443).abs() < 1e-6);
        assert!((r.solution.weights[0] + 0.0794430).abs() < 1e-6);
        assert!((r.constants.gamma_min.unwrap() - 1.38794).abs() < 1e-5);
        assert!(r.solution.mv_efficient);
    }

    #[test]
    fn solve_below_threshold_is_an_error() {
        assert!(solve(&worked(), vec![], 1.2, 1.0).is_err());
    }

    #[test]
    fn frontier_vertex() {
        let (rep, rows) = frontier(&worked(), 1.0, 1.14, 15).unwrap();
        assert!((rep.gmv.x - 1.07).abs() < 1e-12);
        let vertex = &rows[7];
        assert!((vertex.x - 1.07).abs() < 1e-12 && (vertex.v - 0.008).abs() < 1e-12);
        assert!(!rows[0].efficient && rows[14].efficient);
    }

    #[test]
    fn verify_gamma_grid() {
        assert_eq!(verify_gammas(1.5), vec![1.6, 2.0, 5.0, 20.0]);
        assert_eq!(verify_gammas(2.5), vec![2.6, 5.0, 20.0]);
    }

    #[test]
    fn verify_worked_market() {
        let p = worked();
        let rep = verify(VerifyMarkets::Given(&p), None, &OracleConfig::default()).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert_eq!(rep.n_cells, 4);
    }

    #[test]
    fn ladder_decreasing() {
        let rows = lemma1(1.0, &[0.2, 0.1, 0.05, 0.01], 5000).unwrap();
        assert!(rows.windows(2).all(|p| p[1].bound < p[0].bound && p[1].empirical < p[0].empirical));
    }

    #[test]
    fn curve_zero_at_mean() {
        let rows = psi_curve(1.0, &[0.1], 13).unwrap();
        assert_eq!(rows[6].x, 1.0);
        assert_eq!(rows[6].psi, 0.0);
    }
}
