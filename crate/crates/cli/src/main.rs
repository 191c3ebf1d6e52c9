//! `tracelab`: runs one experiment, writes its CSV or JSON artifact and
//! prints a one-line summary.
//!
//! Exit status is 0 when the experiment meets its threshold, 2 when it does
//! not, and 1 on any error, bad flags included.

mod config;
mod experiments;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use thiserror::Error;

use config::{Experiment, Format, Params};
use experiments::Sink;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in `{key}`: {message}")]
    Config { key: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Inequality(#[from] tracelab_core::inequality::InequalityError),
    #[error(transparent)]
    Estimator(#[from] tracelab_core::estimator::EstimatorError),
    #[error(transparent)]
    Geometry(#[from] tracelab_core::geometry::GeometryError),
    #[error(transparent)]
    Bv(#[from] tracelab_core::bv::BvError),
}

impl CliError {
    pub fn config(key: &str, message: impl Into<String>) -> Self {
        CliError::Config { key: key.into(), message: message.into() }
    }
}

#[derive(Debug, Parser)]
#[command(name = "tracelab", version, about = "Experiments on the constants of the BV trace inequality")]
struct Cli {
    /// Experiment name, or `list` for the catalog.
    experiment: Option<String>,
    /// TOML file with the same keys as the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the catalog as JSON (with `list`).
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    params: Params,
}

const DEFAULT_OUT: &str = "tracelab-out";

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    if cli.experiment.as_deref() == Some("list") {
        return list(cli.json);
    }
    let mut params = cli.params;
    params.experiment = cli.experiment;
    let flag_out = params.out.clone();
    if let Some(path) = &cli.config {
        params = params.over(Params::from_file(path)?);
    }
    params.validate()?;
    let name = params
        .experiment
        .clone()
        .ok_or_else(|| CliError::config("experiment", "no experiment given (try `tracelab list`)"))?;
    if name == "list" {
        return list(cli.json);
    }
    let experiment = Experiment::parse(&name)?;

    if let Some(jobs) = params.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::config("jobs", e.to_string()))?;
    }
    // Precedence: flag, then TRACELAB_OUT, then the config file.
    let dir = match (flag_out, std::env::var_os("TRACELAB_OUT")) {
        (Some(p), _) => p,
        (None, Some(env)) => PathBuf::from(env),
        (None, None) => params.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
    };
    let sink = Sink { dir, format: params.format.unwrap_or(Format::Csv) };
    let outcome = experiments::run(experiment, &params, &sink)?;
    println!(
        "{}: {} [{}] -> {}",
        experiment.name(),
        outcome.summary,
        if outcome.pass { "pass" } else { "FAIL" },
        outcome.artifact.display()
    );
    Ok(outcome.pass)
}

fn list(json: bool) -> Result<bool, CliError> {
    use std::io::Write;
    let rows = experiments::catalog();
    let mut out = std::io::stdout().lock();
    let written = if json {
        writeln!(out, "{}", serde_json::to_string_pretty(&rows)?)
    } else {
        let width = rows.iter().map(|r| r.experiment.len()).max().unwrap_or(0);
        rows.iter().try_for_each(|r| writeln!(out, "{:width$}  {}  [{}]", r.experiment, r.reproduces, r.threshold))
    };
    match written {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(true),
    }
}
