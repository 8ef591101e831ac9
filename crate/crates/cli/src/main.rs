use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use cvb_cli::{run_experiment, Config, Experiment};

/// Run a bivariate, clustering or oracle-check experiment and write runs.csv and summary.json.
#[derive(Debug, Parser)]
#[command(name = "cvb", version)]
struct Args {
    /// TOML experiment configuration; defaults apply to anything left out.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results are identical for any value.
    #[arg(long)]
    threads: Option<usize>,
    /// Experiment to run, overriding the `experiment` key.
    #[arg(long, value_enum)]
    experiment: Option<Experiment>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_MONOTONICITY: u8 = 3;

fn main() -> ExitCode {
    let args = Args::parse();
    let mut cfg = match &args.config {
        Some(p) => match Config::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(EXIT_CONFIG);
            }
        },
        None => Config::default(),
    };
    if let Some(e) = args.experiment {
        cfg.experiment = e;
    }
    if let Some(d) = args.out {
        cfg.output.dir = d;
    }
    if args.threads == Some(0) {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(EXIT_CONFIG);
    }
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let report = match run_experiment(&cfg, args.threads) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::FAILURE;
        }
    };
    if let Err(e) = report.write(&cfg, &cfg.output.dir) {
        eprintln!("error: {e:#}");
        return ExitCode::FAILURE;
    }
    let violations = report.violations();
    for v in violations {
        eprintln!("ELBO decreased: {}: {}", v.context, v.message);
    }
    if violations.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_MONOTONICITY)
    }
}
