//! `table`: the benchmark sweeps, one CSV per table.

use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use sicp_core::benchmarks::{ex3, make_problem, BenchmarkId};
use sicp_core::{CenteringStrategy, CutMethod, SolveResult, SolveStatus, SolverConfig};

use crate::{open_output, CliError};

pub const TABLES: [&str; 6] = ["ex1-sweep", "seb1-sweep", "seb2-sweep", "ex4e-sweep", "centering-seb2", "ex3-spectrum"];

#[derive(Debug, Args)]
pub struct TableArgs {
    /// One of ex1-sweep, seb1-sweep, seb2-sweep, ex4e-sweep, centering-seb2, ex3-spectrum.
    pub table: String,
    /// Master seed; cell `i` runs with `seed + i`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Problem sizes for ex4e-sweep.
    #[arg(long, value_delimiter = ',', default_values_t = vec![5, 10, 20, 40])]
    pub sizes: Vec<usize>,
    /// centering-seb2 only: sweep `s / ||grad g||` instead of constant `s`.
    #[arg(long)]
    pub gradfrac: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn write<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Cell {
    result: SolveResult,
    max_iters: usize,
}

fn run(id: BenchmarkId, seed: u64, tweak: impl FnOnce(&mut SolverConfig)) -> Result<Cell, CliError> {
    let mut bench = make_problem(id).map_err(CliError::from_core)?;
    let mut config = bench.config.clone();
    config.rng_seed = seed;
    tweak(&mut config);
    let result = bench.solve(&config).map_err(CliError::from_core)?;
    Ok(Cell { result, max_iters: config.max_iters })
}

impl Cell {
    fn feasibility(&self) -> String {
        self.result.feasibility_cuts().to_string()
    }

    fn optimality(&self) -> String {
        self.result.optimality_cuts().to_string()
    }

    /// `f+o`, or `>max_iters` when the run hit the cut cap.
    fn pair(&self) -> String {
        match self.result.status {
            SolveStatus::Converged => format!("{}+{}", self.feasibility(), self.optimality()),
            SolveStatus::IterLimit => format!(">{}", self.max_iters),
        }
    }
}

/// `log10` of the relative error, floored at `<-10`.
pub fn log_relative_error(value: f64, reference: f64) -> String {
    let rel = (value - reference).abs() / reference.abs();
    if rel < 1e-10 {
        "<-10".into()
    } else {
        format!("{:.3}", rel.log10())
    }
}

/// Rows per `sigma` threshold, both methods side by side. `radius` compares
/// square roots of the objective (the circle problems minimize `r^2`).
fn sigma_sweep(id: BenchmarkId, sigmas: &[f64], radius: bool, seed: u64) -> Result<Table, CliError> {
    let mut t = Table::new(&[
        "sigma",
        "surface_feasibility",
        "surface_optimality",
        "surface_log10_relerr",
        "plane_feasibility",
        "plane_optimality",
        "plane_log10_relerr",
    ]);
    let z = make_problem(id).and_then(|b| b.reference_objective()).map_err(CliError::from_core)?;
    let scale = |v: f64| if radius { v.sqrt() } else { v };
    for (i, &sigma) in sigmas.iter().enumerate() {
        let mut row = vec![format!("{sigma:e}")];
        for method in [CutMethod::Surface, CutMethod::Plane] {
            let c = run(id, seed + i as u64, |c| {
                c.sigma_tol = sigma;
                c.method = method;
                c.centering = CenteringStrategy::Constant(1.0);
            })?;
            row.extend([c.feasibility(), c.optimality(), log_relative_error(scale(c.result.objective), scale(z))]);
        }
        t.rows.push(row);
    }
    Ok(t)
}

fn ex4e_sweep(sizes: &[usize], seed: u64) -> Result<Table, CliError> {
    let mut t = Table::new(&["n", "surface", "plane"]);
    for (i, &n) in sizes.iter().enumerate() {
        let mut row = vec![n.to_string()];
        for method in [CutMethod::Surface, CutMethod::Plane] {
            let c = run(BenchmarkId::Ex4e { n }, seed + i as u64, |c| c.method = method)?;
            row.push(c.pair());
        }
        t.rows.push(row);
    }
    Ok(t)
}

fn centering_seb2(gradfrac: bool, seed: u64) -> Result<Table, CliError> {
    let values: &[f64] =
        if gradfrac { &[1e-9, 1e-7, 1e-5, 1e-3, 1e-2, 1e-1, 1.0] } else { &[1e-9, 1e-7, 1e-5, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2] };
    let mut t = Table::new(&[
        if gradfrac { "s_over_grad" } else { "s" },
        "surface_feasibility",
        "surface_optimality",
        "plane_feasibility",
        "plane_optimality",
    ]);
    for (i, &s) in values.iter().enumerate() {
        let mut row = vec![format!("{s:e}")];
        for method in [CutMethod::Surface, CutMethod::Plane] {
            let c = run(BenchmarkId::Seb2, seed + i as u64, |c| {
                c.method = method;
                c.centering = if gradfrac { CenteringStrategy::GradientFraction(s) } else { CenteringStrategy::Constant(s) };
            })?;
            row.extend([c.feasibility(), c.optimality()]);
        }
        t.rows.push(row);
    }
    Ok(t)
}

fn ex3_spectrum(seed: u64) -> Result<Table, CliError> {
    let mut t = Table::new(&["m", "optimality_cuts", "feasibility_cuts", "x1", "x2", "z"]);
    let ids = (0..=ex3::MAX_ORDER).map(|m| BenchmarkId::Ex3 { m }).chain([BenchmarkId::Ex3Inf]);
    for (i, id) in ids.enumerate() {
        let c = run(id, seed + i as u64, |_| {})?;
        let m = match id {
            BenchmarkId::Ex3 { m } => m.to_string(),
            _ => "inf".into(),
        };
        let y = &c.result.y;
        t.rows.push(vec![
            m,
            c.optimality(),
            c.feasibility(),
            format!("{:.5}", y[1]),
            format!("{:.5}", y[2]),
            format!("{:.4}", c.result.objective),
        ]);
    }
    Ok(t)
}

pub fn build_table(args: &TableArgs) -> Result<Table, CliError> {
    let sigmas4 = [1e-4, 1e-5, 1e-6, 1e-7];
    let sigmas5 = [1e-4, 1e-5, 1e-6, 1e-7, 1e-8];
    match args.table.as_str() {
        "ex1-sweep" => sigma_sweep(BenchmarkId::Ex1, &sigmas4, false, args.seed),
        "seb1-sweep" => sigma_sweep(BenchmarkId::Seb1, &sigmas5, true, args.seed),
        "seb2-sweep" => sigma_sweep(BenchmarkId::Seb2, &sigmas5, true, args.seed),
        "ex4e-sweep" => ex4e_sweep(&args.sizes, args.seed),
        "centering-seb2" => centering_seb2(args.gradfrac, args.seed),
        "ex3-spectrum" => ex3_spectrum(args.seed),
        other => Err(CliError::Parse(format!("unknown table `{other}` (expected one of {})", TABLES.join(", ")))),
    }
}

pub fn cmd_table(args: &TableArgs) -> Result<i32, CliError> {
    let table = build_table(args)?;
    table.write(open_output(args.output.as_deref())?)?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_formatting() {
        assert_eq!(log_relative_error(1.0 + 1e-12, 1.0), "<-10");
        assert_eq!(log_relative_error(1.001, 1.0), "-3.000");
    }
}
