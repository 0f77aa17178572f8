//! `interfall`: run the gravity interference experiments from a config file.

mod config;
mod experiments;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{ExperimentConfig, Format, Kind};
use experiments::RunError;
use output::{write_atomic, Status};

const EXIT_VERIFY: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "interfall", version, about = "Matter-wave interference in a uniform gravitational field")]
struct Cli {
    /// Experiment to run
    #[arg(value_enum)]
    kind: Kind,
    /// Configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory [default: `[output].dir`, else ./out]
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv: data and report; json: report only; svg: data, report and plots
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads [default: all cores]
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let cfg = match ExperimentConfig::parse(cli.kind, &text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error in {}: {e}", cli.config.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: thread pool not configured: {e}");
        }
    }

    let outcome = match experiments::run(&cfg) {
        Ok(o) => o,
        Err(RunError::Config(msg)) => {
            eprintln!("config error in {}: {msg}", cli.config.display());
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(RunError::Physics(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }

    let dir = cli.out.or(cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let format = cli.format.or(cfg.format).unwrap_or(Format::Csv);
    let mut files: Vec<(&str, &str)> = Vec::new();
    if format != Format::Json {
        files.extend(outcome.csv.iter().map(|(n, c)| (n.as_str(), c.as_str())));
    }
    if format == Format::Svg {
        files.extend(outcome.svg.iter().map(|(n, c)| (n.as_str(), c.as_str())));
    }
    let report = outcome.report.to_json();
    files.push(("report.json", &report));
    for (name, contents) in files {
        if let Err(e) = write_atomic(&dir, name, contents) {
            eprintln!("error: writing {}: {e}", dir.join(name).display());
            return ExitCode::from(EXIT_RUNTIME);
        }
    }

    for c in &outcome.report.checks {
        let tag = match c.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        };
        let value = c.value.map_or(String::new(), |v| format!("  {v:.3e}"));
        let tol = c.tolerance.map_or(String::new(), |t| format!(" (tol {t:e})"));
        println!("{tag}  {}{value}{tol}  {}", c.name, c.detail);
    }
    println!("{} written to {}", cfg.kind.name(), dir.display());
    if outcome.report.failed() {
        let failed: Vec<_> = outcome.report.checks.iter().filter(|c| c.status == Status::Fail).map(|c| c.name.as_str()).collect();
        eprintln!("failed checks: {}", failed.join(", "));
        return ExitCode::from(EXIT_VERIFY);
    }
    ExitCode::SUCCESS
}
