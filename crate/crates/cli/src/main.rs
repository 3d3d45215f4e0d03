//! `sicp`: solve benchmarks, reproduce the comparison tables, run the
//! moment oracle directly.
//!
//! Exit codes: 0 converged, 1 iteration limit, 2 usage or parse error,
//! 3 solver error.

mod moment_max;
mod run;
mod tables;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sicp_core::benchmarks::catalog;
use sicp_core::Error;

#[derive(Debug, Parser)]
#[command(name = "sicp", version, about = "Central cutting-surface solver for semi-infinite convex programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one benchmark and write its iteration history.
    Solve(run::SolveArgs),
    /// Run one of the benchmark sweeps.
    Table(tables::TableArgs),
    /// Maximize an expectation over a moment set.
    MomentMax(moment_max::MomentArgs),
    /// Print the benchmark ids.
    ListBenchmarks,
}

#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Solver(String),
    Io(String),
}

impl CliError {
    /// Bad ids and configurations are the caller's fault, everything else
    /// the solver's.
    pub fn from_core(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::UnknownBenchmark(_) | Error::Config(_) => CliError::Parse(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Solver(_) | CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "error: {m}"),
            CliError::Solver(m) => write!(f, "solver error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => {
            Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?))
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn list_benchmarks() -> Result<i32, CliError> {
    let mut out = io::stdout().lock();
    for (id, description) in catalog() {
        writeln!(out, "{id:<10} {description}")?;
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = match &cli.command {
        Command::Solve(a) => run::cmd_solve(a),
        Command::Table(a) => tables::cmd_table(a),
        Command::MomentMax(a) => moment_max::cmd_moment_max(a),
        Command::ListBenchmarks => list_benchmarks(),
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
