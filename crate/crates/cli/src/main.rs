use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use zermelo_cli::{CliError, CurveKind, CurveRequest, RunOptions, Scenario, ScenarioConfig, Suite};

/// Numerical verification of Zermelo navigation by homothetic winds.
#[derive(Parser)]
#[command(name = "zermelo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites on a built-in scenario or a TOML config.
    Verify {
        /// Built-in scenario name or path to a config file.
        scenario: String,
        /// Suites to run (repeatable or comma-separated); default: the
        /// config's selection, or all.
        #[arg(long = "suite", value_delimiter = ',')]
        suites: Vec<String>,
        /// Override the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Output directory [default: zermelo-out/<scenario>].
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write report.json (and print it instead of the summary).
        #[arg(long)]
        json: bool,
        /// Write the per-suite CSV tables.
        #[arg(long)]
        csv: bool,
        /// Replace the wind by V = 0.
        #[arg(long)]
        zero_wind: bool,
    },
    /// List the built-in scenarios and their expected outcomes.
    List,
    /// Dump a geodesic (optionally with a Jacobi field) as CSV.
    ExportCurve {
        scenario: String,
        #[arg(long, value_enum, default_value_t = Kind::Base)]
        metric: Kind,
        /// Initial point, comma-separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x0: Vec<f64>,
        /// Initial direction, rescaled to unit speed.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        y0: Vec<f64>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t0: f64,
        #[arg(long, default_value_t = 0.5)]
        t1: f64,
        /// Number of sample intervals (rows = samples + 1).
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Jacobi field J(0), comma-separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "dj0")]
        j0: Option<Vec<f64>>,
        /// Covariant derivative of the Jacobi field at 0.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "j0")]
        dj0: Option<Vec<f64>>,
        /// Output file [default: stdout].
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        zero_wind: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Base,
    Navigated,
    Transported,
}

fn parse_suites(names: &[String]) -> Result<Option<Vec<Suite>>, CliError> {
    if names.is_empty() {
        return Ok(None);
    }
    names
        .iter()
        .map(|n| {
            Suite::parse(n).ok_or_else(|| {
                let known: Vec<_> = Suite::ALL.iter().map(|s| s.name()).collect();
                CliError::Config(format!("unknown suite '{n}' (known: {})", known.join(", ")))
            })
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::List => {
            print!("{}", zermelo_cli::list_scenarios());
            Ok(0)
        }
        Command::Verify { scenario, suites, seed, jobs, out, json, csv, zero_wind } => {
            let config = ScenarioConfig::load(&scenario)?;
            let opts = RunOptions { suites: parse_suites(&suites)?, seed, jobs, zero_wind };
            let dir = out.unwrap_or_else(|| PathBuf::from("zermelo-out").join(&config.name));
            let result = zermelo_cli::run(config, &opts)?;
            // neither flag: write everything
            let (write_json, write_csv) = if json || csv { (json, csv) } else { (true, true) };
            zermelo_cli::write_outputs(&result, &dir, write_json, write_csv)?;
            if json {
                print!("{}", result.report.to_json());
            } else {
                print!("{}", zermelo_cli::summary(&result.report));
                println!("outputs written to {}", dir.display());
            }
            Ok(result.exit_code())
        }
        Command::ExportCurve { scenario, metric, x0, y0, t0, t1, samples, j0, dj0, out, zero_wind } => {
            let config = ScenarioConfig::load(&scenario)?;
            let sc: Scenario = zermelo_cli::prepare(config, &RunOptions { zero_wind, ..RunOptions::default() })?;
            let kind = match metric {
                Kind::Base => CurveKind::Base,
                Kind::Navigated => CurveKind::Navigated,
                Kind::Transported => CurveKind::Transported,
            };
            let req = CurveRequest { kind, x0, y0, span: (t0, t1), samples, jacobi: j0.zip(dj0) };
            let table = zermelo_cli::export_curve(&sc, &req)?;
            zermelo_cli::write_table_to(&table, out.as_deref())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
