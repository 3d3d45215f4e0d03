//! `solve`: one benchmark run, history CSV plus summary.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;
use sicp_core::benchmarks::{make_problem, BenchmarkId};
use sicp_core::{CenteringStrategy, CutMethod, SolveResult, SolveStatus, SolverConfig};

use crate::{open_output, CliError};

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Benchmark id (`ex1`, `seb2`, `ex4e:n=20`, `ex3:m=4`, ...) or path to a
    /// TOML run file.
    #[arg(long)]
    pub benchmark: String,
    /// `surface` or `plane`.
    #[arg(long)]
    pub method: Option<String>,
    /// `const:S`, `gradfrac:A`, `clamp:SMIN:SMAX`, `clamp:A:SMIN:SMAX` or `none`.
    #[arg(long)]
    pub centering: Option<String>,
    #[arg(long)]
    pub sigma_tol: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Cut-drop parameter; `inf` keeps every cut.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// History CSV destination; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Run-file schema. Every field but `benchmark` is optional and overridden
/// by the matching flag.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub benchmark: String,
    pub method: Option<String>,
    pub centering: Option<String>,
    pub sigma_tol: Option<f64>,
    pub epsilon: Option<f64>,
    pub beta: Option<f64>,
    pub seed: Option<u64>,
    pub max_iters: Option<usize>,
}

/// A fully resolved run: benchmark plus the configuration it is solved with.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub benchmark: BenchmarkId,
    pub config: SolverConfig,
}

pub fn parse_method(s: &str) -> Result<CutMethod, CliError> {
    match s {
        "surface" => Ok(CutMethod::Surface),
        "plane" => Ok(CutMethod::Plane),
        _ => Err(CliError::Parse(format!("unknown method `{s}` (expected surface or plane)"))),
    }
}

fn number(s: &str, what: &str) -> Result<f64, CliError> {
    s.parse().map_err(|_| CliError::Parse(format!("bad number `{s}` in centering {what}")))
}

pub fn parse_centering(s: &str) -> Result<CenteringStrategy, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    Ok(match parts.as_slice() {
        ["none"] => CenteringStrategy::None,
        ["const", v] => CenteringStrategy::Constant(number(v, s)?),
        ["gradfrac", v] => CenteringStrategy::GradientFraction(number(v, s)?),
        ["clamp", lo, hi] => CenteringStrategy::Clamped { fraction: 1.0, s_min: number(lo, s)?, s_max: number(hi, s)? },
        ["clamp", a, lo, hi] => {
            CenteringStrategy::Clamped { fraction: number(a, s)?, s_min: number(lo, s)?, s_max: number(hi, s)? }
        }
        _ => return Err(CliError::Parse(format!("unknown centering `{s}`"))),
    })
}

impl SolveArgs {
    fn run_file(&self) -> Result<RunFile, CliError> {
        let path = Path::new(&self.benchmark);
        if self.benchmark.ends_with(".toml") || path.is_file() {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
        } else {
            Ok(RunFile { benchmark: self.benchmark.clone(), ..RunFile::default() })
        }
    }

    pub fn resolve(&self) -> Result<RunSpec, CliError> {
        let file = self.run_file()?;
        let id: BenchmarkId = file.benchmark.parse().map_err(|e: sicp_core::Error| CliError::Parse(e.to_string()))?;
        let mut config = make_problem(id).map_err(CliError::from_core)?.config;
        if let Some(m) = self.method.as_deref().or(file.method.as_deref()) {
            config.method = parse_method(m)?;
        }
        if let Some(c) = self.centering.as_deref().or(file.centering.as_deref()) {
            config.centering = parse_centering(c)?;
        }
        if let Some(v) = self.sigma_tol.or(file.sigma_tol) {
            config.sigma_tol = v;
        }
        if let Some(v) = self.epsilon.or(file.epsilon) {
            config.epsilon = v;
        }
        if let Some(v) = self.beta.or(file.beta) {
            config.beta = v;
        }
        if let Some(v) = self.seed.or(file.seed) {
            config.rng_seed = v;
        }
        if let Some(v) = self.max_iters.or(file.max_iters) {
            config.max_iters = v;
        }
        Ok(RunSpec { benchmark: id, config })
    }
}

pub fn solve_spec(spec: &RunSpec) -> Result<SolveResult, CliError> {
    let mut bench = make_problem(spec.benchmark).map_err(CliError::from_core)?;
    bench.solve(&spec.config).map_err(CliError::from_core)
}

pub fn write_history<W: Write>(out: W, result: &SolveResult) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iter", "cut_type", "sigma", "y0", "mu0", "dropped"])?;
    for r in &result.history {
        let dropped: Vec<String> = r.dropped.iter().map(|(id, _)| id.to_string()).collect();
        w.write_record([
            r.k.to_string(),
            r.cut_type.as_str().to_string(),
            format!("{:e}", r.sigma),
            format!("{:.12}", r.y0),
            r.mu0.map(|m| format!("{m:.6e}")).unwrap_or_default(),
            dropped.join(";"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary<W: Write>(out: W, result: &SolveResult) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["feasibility_cuts", "optimality_cuts", "final_objective", "status"])?;
    w.write_record([
        result.feasibility_cuts().to_string(),
        result.optimality_cuts().to_string(),
        format!("{:.10}", result.objective),
        result.status.as_str().to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

pub fn cmd_solve(args: &SolveArgs) -> Result<i32, CliError> {
    let spec = args.resolve()?;
    let result = solve_spec(&spec)?;
    let to_stdout = args.output.is_none();
    write_history(open_output(args.output.as_deref())?, &result)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if to_stdout {
        writeln!(out)?;
    }
    write_summary(&mut out, &result)?;
    let x: Vec<String> = result.y.iter().map(|v| format!("{v:.8}")).collect();
    writeln!(
        out,
        "# {} {:?}: {} feasibility + {} optimality cuts, objective {:.10}, violation {:.3e}, x = ({}), {}",
        spec.benchmark,
        spec.config.method,
        result.feasibility_cuts(),
        result.optimality_cuts(),
        result.objective,
        result.final_violation,
        x.join(", "),
        result.status.as_str(),
    )?;
    Ok(match result.status {
        SolveStatus::Converged => 0,
        SolveStatus::IterLimit => 1,
    })
}
