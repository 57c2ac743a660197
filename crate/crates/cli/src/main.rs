//! `sublin`: runs verification experiments for laws of large numbers under
//! sublinear expectations and writes CSV tables, SVG plots and a JSON
//! report.
//!
//! Exit codes: 0 when every verdict passes, 1 on any input or I/O error,
//! 2 when a verdict fails. `SUBLIN_THREADS` caps the worker pool.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

mod config;
mod experiments;
mod report;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use sublin_core::fixtures::list_fixtures;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] sublin_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Parser)]
#[command(name = "sublin", version, about = "Verification experiments for laws of large numbers under sublinear expectations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Override a config value: `--set parameters.eps=0.1`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// List the bundled models.
    Fixtures,
    /// Print the version.
    Version,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SUBLIN_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|t| *t > 0)
        .ok_or_else(|| CliError::Config(format!("SUBLIN_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size the worker pool: {e}")))
}

fn run(config: PathBuf, overrides: Vec<String>) -> Result<bool, CliError> {
    init_threads()?;
    let loaded = config::load(&config, &overrides)?;
    let kind = loaded.config.experiment.as_str();
    let start = Instant::now();
    let outcome = experiments::run(&loaded)?;
    let output = loaded.config.output.clone();
    let report = report::write(&output, kind, &loaded.model_label, loaded.document, outcome)?;
    for v in &report.verdicts {
        let relation = serde_json::to_value(v.relation)?;
        println!(
            "{} {}: {} {} {} ({})",
            if v.passed { "PASS" } else { "FAIL" },
            v.id,
            v.observed,
            relation.as_str().unwrap_or("?"),
            v.threshold,
            v.description
        );
    }
    println!(
        "{kind} on {}: {} in {:.1}s, artifacts in {}",
        report.model,
        if report.passed { "passed" } else { "FAILED" },
        start.elapsed().as_secs_f64(),
        output.display()
    );
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage errors are input errors; help and version output are not errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Fixtures => {
            for f in list_fixtures() {
                let kind = match f.kind {
                    sublin_core::fixtures::FixtureKind::Sequence => "sequence",
                    sublin_core::fixtures::FixtureKind::Family => "family",
                };
                println!("{}\t{kind}\t{}", f.name, f.description);
            }
            ExitCode::SUCCESS
        }
        Command::Version => {
            println!("sublin {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
        Command::Run { config, overrides } => match run(config, overrides) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(2),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
    }
}
