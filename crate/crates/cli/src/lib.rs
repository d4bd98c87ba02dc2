//! Batch front end: reads a JSON run config, analyzes every sweep point and writes a JSON
//! or CSV report.
//!
//! Exit codes: 0 when every enforced check and assertion holds, 2 when one fails, 1 on
//! input errors.

pub mod config;
pub mod error;
pub mod record;
pub mod registry;
pub mod sweep;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use qopt_core::analysis::{CHECKS, RESTRICTION_CHECK};

pub use config::{Format, RunConfig};
pub use error::{CliError, CliResult};
pub use record::{ReportDocument, ReportRecord};
pub use sweep::SweepSummary;

/// Environment variable bounding the worker threads.
pub const THREADS_ENV: &str = "QOPT_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "qopt",
    version,
    about = "Quasi-optimality constants of nonconforming methods"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    /// Run config (JSON).
    #[arg(long, short)]
    pub config: PathBuf,
    /// Report destination; overrides the config. Defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report format; overrides the config and the file extension.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Include per-point wall time (makes the report nondeterministic).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analyze every point of a config and enforce its checks.
    Analyze(RunArgs),
    /// Like `analyze`, plus trend assertions and a summary table; requires a sweep.
    Sweep(RunArgs),
    /// List the model generators and their parameters.
    ListModels,
    /// List the checks and their default tolerances.
    ListChecks,
}

fn thread_count() -> CliResult<usize> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::InvalidConfig(format!(
                "{THREADS_ENV} must be a positive integer, got `{s}`"
            ))),
        },
    }
}

/// Analyzes every point of `config` in sweep order.
pub fn evaluate(config: &RunConfig, timing: bool) -> CliResult<Vec<ReportRecord>> {
    let entry = registry::find(&config.model.name).ok_or_else(|| CliError::UnknownModel(config.model.name.clone()))?;
    let points = config.points()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| CliError::InvalidConfig(format!("cannot start worker threads: {e}")))?;
    pool.install(|| {
        points
            .par_iter()
            .map(|p| record::evaluate_point(entry, config, p, timing))
            .collect()
    })
}

fn output_format(args: &RunArgs, config: &RunConfig, path: Option<&Path>) -> Format {
    args.format.or(config.output.format).unwrap_or_else(|| {
        match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Json,
        }
    })
}

fn write_report(args: &RunArgs, config: &RunConfig, doc: &ReportDocument<'_>, stdout: &mut dyn Write) -> CliResult<()> {
    let path = args
        .out
        .clone()
        .or_else(|| config.output.path.as_ref().map(PathBuf::from));
    let format = output_format(args, config, path.as_deref());
    let mut buf = Vec::new();
    match format {
        Format::Json => record::write_json(doc, &mut buf)?,
        Format::Csv => record::write_csv(doc.records, &mut buf)?,
    }
    match path {
        Some(p) => std::fs::write(&p, &buf).map_err(|e| CliError::Io {
            context: format!("cannot write {}", p.display()),
            source: e,
        }),
        None => stdout.write_all(&buf).map_err(|e| CliError::Io {
            context: "cannot write to stdout".into(),
            source: e,
        }),
    }
}

fn run_config(sweep: bool, args: &RunArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<bool> {
    let config = RunConfig::load(&args.config)?;
    if sweep && config.sweep.is_empty() {
        return Err(CliError::InvalidConfig(format!(
            "{} has no `sweep` section (use `qopt analyze` for a single point)",
            args.config.display()
        )));
    }
    let records = evaluate(&config, args.timing)?;
    let summary = if sweep {
        Some(SweepSummary::new(&records, &config.assertions)?)
    } else {
        None
    };
    let command = if sweep { "sweep" } else { "analyze" };
    let doc = ReportDocument::new(command, &config.model.name, &records, summary.as_ref());
    write_report(args, &config, &doc, stdout)?;

    let _ = match &summary {
        Some(s) => write!(stderr, "{}", sweep::render_table(&records, s)),
        None => Ok(()),
    };
    for r in &records {
        let failed: Vec<&str> = r.failed_checks().map(|c| c.name.as_str()).collect();
        if !failed.is_empty() {
            let _ = writeln!(stderr, "point {}: failed {}", r.point, failed.join(", "));
        }
    }
    let _ = writeln!(stderr, "{}", if doc.passed { "all checks passed" } else { "FAILED" });
    Ok(doc.passed)
}

fn list_models(stdout: &mut dyn Write) -> std::io::Result<()> {
    for m in registry::MODELS {
        writeln!(stdout, "{}\n    {}\n    params: {}", m.name, m.description, m.params)?;
    }
    Ok(())
}

fn list_checks(stdout: &mut dyn Write) -> std::io::Result<()> {
    for c in CHECKS.iter().chain(std::iter::once(&RESTRICTION_CHECK)) {
        writeln!(
            stdout,
            "{:<32} tol {:<8e} {}",
            c.name, c.default_tolerance, c.description
        )?;
    }
    Ok(())
}

/// Runs a parsed command and returns the process exit code.
pub fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Analyze(args) => run_config(false, args, stdout, stderr),
        Command::Sweep(args) => run_config(true, args, stdout, stderr),
        Command::ListModels => list_models(stdout).map(|_| true).map_err(|e| CliError::Io {
            context: "cannot write to stdout".into(),
            source: e,
        }),
        Command::ListChecks => list_checks(stdout).map(|_| true).map_err(|e| CliError::Io {
            context: "cannot write to stdout".into(),
            source: e,
        }),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => 2,
        Err(e) => {
            let mut msg = format!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                if !msg.ends_with(&s.to_string()) {
                    msg.push_str(&format!(": {s}"));
                }
                source = s.source();
            }
            let _ = writeln!(stderr, "{msg}");
            1
        }
    }
}
