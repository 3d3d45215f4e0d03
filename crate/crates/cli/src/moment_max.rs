//! `moment-max`: `max E_P[h(xi)]` over a moment set read from TOML.

use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use evalexpr::{build_operator_tree, ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node, Value};
use nalgebra::DVector;
use sicp_core::moment::{maximize_expectation, parse_moment_file, Certificate, MomentSettings, SampleBudget};

use crate::{open_output, CliError};

#[derive(Debug, Args)]
pub struct MomentArgs {
    /// Moment-set file (`[domain]` table plus `[[moment]]` entries).
    #[arg(long)]
    pub spec: PathBuf,
    /// `h` as an expression in `x0, x1, ...` (`x` also names `x0`), e.g.
    /// `math::sin(3 * x) + x^2`.
    #[arg(long)]
    pub objective: String,
    #[arg(long, default_value_t = 1e-4)]
    pub eps: f64,
    /// Fixed number of consecutive non-improving samples.
    #[arg(long, conflicts_with = "delta")]
    pub samples: Option<usize>,
    /// Failure probability for the volume-based sample bound.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Cap on the sample bound when `--delta` is given.
    #[arg(long, default_value_t = 100_000)]
    pub max_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Support CSV destination; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

type Expr = Node<DefaultNumericTypes>;

pub fn parse_objective(text: &str) -> Result<Expr, CliError> {
    build_operator_tree::<DefaultNumericTypes>(text).map_err(|e| CliError::Parse(format!("objective `{text}`: {e}")))
}

pub fn eval_objective(expr: &Expr, xi: &DVector<f64>) -> Result<f64, String> {
    let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
    for (i, v) in xi.iter().enumerate() {
        ctx.set_value(format!("x{i}"), Value::Float(*v)).map_err(|e| e.to_string())?;
    }
    if !xi.is_empty() {
        ctx.set_value("x".into(), Value::Float(xi[0])).map_err(|e| e.to_string())?;
    }
    expr.eval_number_with_context(&ctx).map_err(|e| e.to_string())
}

pub fn cmd_moment_max(args: &MomentArgs) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(&args.spec)
        .map_err(|e| CliError::Parse(format!("{}: {e}", args.spec.display())))?;
    let (spec, domain) = parse_moment_file(&text).map_err(|e| CliError::Parse(e.to_string()))?;
    let expr = parse_objective(&args.objective)?;
    // Surface name errors before sampling starts.
    for p in domain.probe_points() {
        eval_objective(&expr, &p).map_err(|e| CliError::Parse(format!("objective `{}`: {e}", args.objective)))?;
    }

    let budget = match (args.samples, args.delta) {
        (_, Some(delta)) => SampleBudget::Confidence { delta, max: args.max_samples },
        (Some(n), None) => SampleBudget::Fixed(n),
        (None, None) => MomentSettings::default().budget,
    };
    let settings = MomentSettings { eps: args.eps, budget, ..MomentSettings::default() };
    let h = |xi: &DVector<f64>| eval_objective(&expr, xi).unwrap_or(f64::NAN);
    let out = maximize_expectation(&h, &spec, &domain, &settings, args.seed, None).map_err(CliError::from_core)?;

    let dim = domain.dim();
    let mut w = csv::Writer::from_writer(open_output(args.output.as_deref())?);
    let mut header = vec!["weight".to_string()];
    header.extend((0..dim).map(|i| format!("xi{i}")));
    w.write_record(&header)?;
    for (p, wt) in out.distribution.points.iter().zip(&out.distribution.weights) {
        if *wt <= 0.0 {
            continue;
        }
        let mut row = vec![format!("{wt:.12e}")];
        row.extend(p.iter().map(|v| format!("{v:.12e}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    drop(w);

    let certificate = match out.certificate {
        Certificate::EpsOptimal { samples } => format!("eps-optimal after {samples} samples"),
        Certificate::EarlyViolation => "early stop".into(),
    };
    let stdout = std::io::stdout();
    let mut o = stdout.lock();
    writeln!(
        o,
        "# value {:.12}, support {}, {} LP solves, moment violation {:.2e}, {certificate}",
        out.value,
        out.distribution.support_size(),
        out.lp_solves,
        out.distribution.moment_violation(&spec),
    )?;
    if let Some(d) = out.implied_delta {
        writeln!(o, "# implied failure probability {d:.3e}")?;
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_expressions() {
        let e = parse_objective("x^2 + 2 * x1 - math::sin(x0)").unwrap();
        let v = eval_objective(&e, &DVector::from_vec(vec![0.5, 3.0])).unwrap();
        assert!((v - (0.25 + 6.0 - 0.5f64.sin())).abs() < 1e-15);
        assert!(eval_objective(&parse_objective("y + 1").unwrap(), &DVector::from_vec(vec![0.0])).is_err());
        assert!(parse_objective("x + (2").is_err());
    }
}
