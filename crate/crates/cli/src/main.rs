use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use crra_cli::commands::{self, VerifyMarkets, DEFAULT_LADDER};
use crra_cli::config::{
    parse_f64_list, parse_k_range, read_json, DataSource, MarketFile, StudyConfig,
    DEFAULT_GAMMAS, DEFAULT_K_RANGE, DEFAULT_QUANTILES, DEFAULT_SUBSET_CAP,
};
use crra_cli::{run_study, CliError, CliResult};
use crra_core::market::{estimate_params, load_returns_csv, synth_market, CsvOptions, SynthSpec};
use crra_core::oracle::OracleConfig;
use crra_core::Market;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "crra", version, about = "Closed-form CRRA portfolios under a log-normal approximation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal portfolio for one market and one gamma, as JSON.
    Solve {
        #[command(flatten)]
        market: MarketSource,
        /// Seed for --synth.
        #[arg(long, env = "CRRA_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "CRRA_GAMMA")]
        gamma: f64,
        #[arg(long, env = "CRRA_W0", default_value_t = 1.0)]
        w0: f64,
    },
    /// Efficient-set constants and a sampled parabola.
    Frontier {
        #[command(flatten)]
        market: MarketSource,
        /// Seed for --synth.
        #[arg(long, env = "CRRA_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long, allow_hyphen_values = true)]
        x_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        x_max: Option<f64>,
        /// Directory for frontier.json and frontier.csv.
        #[arg(long, env = "CRRA_OUT")]
        out: PathBuf,
    },
    /// Closed form against the numerical oracle; exits 3 on any failure.
    Verify {
        /// Market JSON; random markets when absent.
        #[arg(long, env = "CRRA_MARKET")]
        market: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        markets: usize,
        #[arg(long, env = "CRRA_K_RANGE", default_value = "2-8")]
        k_range: String,
        #[arg(long, env = "CRRA_SEED", default_value_t = 0)]
        seed: u64,
        /// Overrides the default {gamma_min + 0.1, 2, 5, 20}.
        #[arg(long, env = "CRRA_GAMMAS")]
        gammas: Option<String>,
        #[arg(long, default_value_t = 16)]
        n_starts: usize,
        /// Write the report here instead of stdout.
        #[arg(long, env = "CRRA_OUT")]
        out: Option<PathBuf>,
    },
    /// Normal vs matched log-normal CDF distance along a sigma/mu ladder.
    Lemma1 {
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value = DEFAULT_LADDER)]
        ratios: String,
        #[arg(long, default_value_t = 10_000)]
        grid: usize,
        /// Also write both CDFs and their difference to this CSV.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Synthetic return CSV from a spec file.
    Synth {
        #[arg(long, env = "CRRA_SYNTH")]
        synth: PathBuf,
        #[arg(long, env = "CRRA_SEED", default_value_t = 0)]
        seed: u64,
        /// Output CSV; stdout when absent.
        #[arg(long, env = "CRRA_OUT")]
        out: Option<PathBuf>,
    },
    /// Subset study: condition rates, log-normality screen, strategy ECDFs.
    #[command(alias = "run")]
    Study(StudyArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct MarketSource {
    /// JSON with `mu` and `sigma`.
    #[arg(long, env = "CRRA_MARKET")]
    market: Option<PathBuf>,
    /// Return CSV; parameters are estimated from it.
    #[arg(long, env = "CRRA_DATA")]
    data: Option<PathBuf>,
    /// Synthetic spec; returns are drawn with --seed and then estimated.
    #[arg(long, env = "CRRA_SYNTH")]
    synth: Option<PathBuf>,
}

impl MarketSource {
    fn load(&self, seed: u64) -> CliResult<(Market, Vec<String>)> {
        if let Some(p) = &self.market {
            let m: MarketFile = read_json(p)?;
            return Ok((m.params()?, m.labels.clone().unwrap_or_default()));
        }
        let returns = if let Some(p) = &self.data {
            load_returns_csv(p, &CsvOptions::default())?
        } else if let Some(p) = &self.synth {
            let spec: SynthSpec = read_json(p)?;
            synth_market(&spec, seed)?
        } else {
            return Err(CliError::Config("one of --market, --data, --synth is required".into()));
        };
        Ok((estimate_params(&returns)?, returns.asset_labels().to_vec()))
    }
}

#[derive(Args)]
struct StudyArgs {
    #[arg(long, env = "CRRA_DATA", conflicts_with = "synth", required_unless_present = "synth")]
    data: Option<PathBuf>,
    #[arg(long, env = "CRRA_SYNTH")]
    synth: Option<PathBuf>,
    #[arg(long, env = "CRRA_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "CRRA_K_RANGE", default_value = DEFAULT_K_RANGE)]
    k_range: String,
    #[arg(long, env = "CRRA_GAMMAS", default_value = DEFAULT_GAMMAS)]
    gammas: String,
    #[arg(long, env = "CRRA_SUBSET_CAP", default_value_t = DEFAULT_SUBSET_CAP)]
    subset_cap: usize,
    #[arg(long, env = "CRRA_W0", default_value_t = 1.0)]
    w0: f64,
    #[arg(long, env = "CRRA_OUT")]
    out: PathBuf,
    #[arg(long, env = "CRRA_QUANTILES", default_value = DEFAULT_QUANTILES)]
    quantiles: String,
}

impl StudyArgs {
    fn config(&self) -> CliResult<StudyConfig> {
        let source = match (&self.data, &self.synth) {
            (Some(p), None) => DataSource::Csv { path: p.clone() },
            (None, Some(p)) => DataSource::Synth { spec: p.clone() },
            _ => return Err(CliError::Config("exactly one of --data, --synth".into())),
        };
        let cfg = StudyConfig {
            source,
            seed: self.seed,
            k_range: parse_k_range(&self.k_range)?,
            gamma_grid: parse_f64_list(&self.gammas)?,
            n_subsets_cap: self.subset_cap,
            w0: self.w0,
            output_dir: self.out.clone(),
            quantiles: parse_f64_list(&self.quantiles)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_json<T: Serialize>(value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io {
        path: "<stdout>".into(),
        message: e.to_string(),
    })?;
    match writeln!(io::stdout().lock(), "{text}") {
        // reader went away, e.g. `crra solve ... | head`
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => r.map_err(|e| io_err(Path::new("<stdout>"), e)),
    }
}

fn write_file_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Solve { market, seed, gamma, w0 } => {
            let (params, labels) = market.load(seed)?;
            print_json(&commands::solve(&params, labels, gamma, w0)?)
        }
        Command::Frontier { market, seed, points, x_min, x_max, out } => {
            let (params, _) = market.load(seed)?;
            let (lo, hi) = commands::default_x_range(&params);
            let (report, rows) =
                commands::frontier(&params, x_min.unwrap_or(lo), x_max.unwrap_or(hi), points)?;
            fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
            write_file_json(&out.join("frontier.json"), &report)?;
            write_csv(&out.join("frontier.csv"), &rows)
        }
        Command::Verify { market, markets, k_range, seed, gammas, n_starts, out } => {
            let oracle = OracleConfig { n_starts, seed, ..OracleConfig::default() };
            let gammas = gammas.as_deref().map(parse_f64_list).transpose()?;
            let k_range = parse_k_range(&k_range)?;
            let given = market.as_deref().map(read_json::<MarketFile>).transpose()?;
            let given = given.map(|m| m.params()).transpose()?;
            let which = match &given {
                Some(p) => VerifyMarkets::Given(p),
                None => VerifyMarkets::Random { n_markets: markets, k_range: &k_range, seed },
            };
            let report = commands::verify(which, gammas.as_deref(), &oracle)?;
            match &out {
                Some(p) => write_file_json(p, &report)?,
                None => print_json(&report)?,
            }
            if report.passed {
                Ok(())
            } else {
                Err(CliError::Verification(format!(
                    "{} of {} cells outside tolerance",
                    report.n_failed, report.n_cells
                )))
            }
        }
        Command::Lemma1 { mu, ratios, grid, curve } => {
            let ratios = parse_f64_list(&ratios)?;
            let rows = commands::lemma1(mu, &ratios, grid)?;
            let stdout = io::stdout();
            let mut w = csv::Writer::from_writer(stdout.lock());
            for r in &rows {
                w.serialize(r).map_err(|e| io_err(Path::new("<stdout>"), e))?;
            }
            w.flush().map_err(|e| io_err(Path::new("<stdout>"), e))?;
            if let Some(path) = curve {
                write_csv(&path, &commands::psi_curve(mu, &ratios, 1201)?)?;
            }
            Ok(())
        }
        Command::Synth { synth, seed, out } => {
            let spec: SynthSpec = read_json(&synth)?;
            let returns = synth_market(&spec, seed)?;
            match out {
                Some(p) => {
                    let f = File::create(&p).map_err(|e| io_err(&p, e))?;
                    commands::write_returns_csv(&returns, BufWriter::new(f))
                }
                None => commands::write_returns_csv(&returns, io::stdout().lock()),
            }
        }
        Command::Study(args) => {
            let cfg = args.config()?;
            let report = run_study(&cfg)?;
            let s = &report.summary;
            eprintln!(
                "{} cells over k in {:?}; outputs in {}",
                report.cells.len(),
                s.config.k_range,
                cfg.output_dir.display()
            );
            print_json(&s.checks)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(io::stderr(), "{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
