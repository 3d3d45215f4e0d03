//! Benchmark ids (`ex1`, `seb1`, `seb2`, `ex4e:n=20`, `ex3:m=4`, `ex3:inf`)
//! and the problem/oracle/config bundle behind each.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use super::ex1::{self, Ex1Family};
use super::ex3;
use super::ex4e::{self, Ex4eFamily};
use super::search::IntervalOracle;
use super::seb::{self, Curve};
use crate::cutting::{run_with, SeparationOracle, SolveResult};
use crate::diagnostics::RateInputs;
use crate::dro::{DroFamily, FiniteIndexOracle};
use crate::error::{Error, Result};
use crate::master::MasterOptions;
use crate::problem::{SemiInfiniteFamily, SicpProblem, SlaterInfo, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchmarkId {
    Ex1,
    Seb1,
    Seb2,
    Ex4e { n: usize },
    Ex3 { m: usize },
    Ex3Inf,
}

impl fmt::Display for BenchmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchmarkId::Ex1 => write!(f, "ex1"),
            BenchmarkId::Seb1 => write!(f, "seb1"),
            BenchmarkId::Seb2 => write!(f, "seb2"),
            BenchmarkId::Ex4e { n } => write!(f, "ex4e:n={n}"),
            BenchmarkId::Ex3 { m } => write!(f, "ex3:m={m}"),
            BenchmarkId::Ex3Inf => write!(f, "ex3:inf"),
        }
    }
}

fn param(rest: &str, key: &str, s: &str) -> Result<usize> {
    rest.strip_prefix(key)
        .and_then(|v| v.strip_prefix('='))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::UnknownBenchmark(s.into()))
}

impl FromStr for BenchmarkId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let id = match (name, rest) {
            ("ex1", None) => BenchmarkId::Ex1,
            ("seb1", None) => BenchmarkId::Seb1,
            ("seb2", None) => BenchmarkId::Seb2,
            ("ex4e", Some(r)) => BenchmarkId::Ex4e { n: param(r, "n", s)? },
            ("ex3", Some("inf")) | ("ex3-inf", None) => BenchmarkId::Ex3Inf,
            ("ex3", Some(r)) => BenchmarkId::Ex3 { m: param(r, "m", s)? },
            _ => return Err(Error::UnknownBenchmark(s.into())),
        };
        match id {
            BenchmarkId::Ex4e { n } if n < 2 => Err(Error::UnknownBenchmark(format!("{s} (needs n >= 2)"))),
            BenchmarkId::Ex3 { m } if m > ex3::MAX_ORDER => {
                Err(Error::UnknownBenchmark(format!("{s} (needs m <= {})", ex3::MAX_ORDER)))
            }
            id => Ok(id),
        }
    }
}

/// `(id pattern, description)` for every family.
pub fn catalog() -> Vec<(&'static str, &'static str)> {
    vec![
        ("ex1", "min (x1-2)^2 + (x2-0.2)^2 s.t. c(t) x1^2 <= x2, t in [0,1]"),
        ("seb1", "smallest circle around p(t), c = 4.5, t in [0, 4 pi]"),
        ("seb2", "smallest circle around p(t) + sin(20t), c = 40, t in [0, 2 pi]"),
        ("ex4e:n=N", "min x0 s.t. sum_i (i x_i - i/N - sin(2 pi t + i))^2 <= x0, N >= 2"),
        ("ex3:m=M", "ex1 constraint in expectation over the moment set of order M in 0..=6"),
        ("ex3:inf", "ex1 constraint in expectation under the uniform law (256-node rule)"),
    ]
}

pub enum Instance {
    Ex1(SicpProblem<Ex1Family>, IntervalOracle),
    Seb(SicpProblem<Curve>, IntervalOracle),
    Ex4e(SicpProblem<Ex4eFamily>, IntervalOracle),
    /// The randomized oracle is rebuilt from the run seed on every solve.
    Dro(SicpProblem<DroFamily>, usize),
    Sp(SicpProblem<DroFamily>, FiniteIndexOracle),
}

pub struct Benchmark {
    pub id: BenchmarkId,
    pub instance: Instance,
    /// Recommended configuration.
    pub config: SolverConfig,
}

pub fn make_problem(id: BenchmarkId) -> Result<Benchmark> {
    let (instance, config) = match id {
        BenchmarkId::Ex1 => (Instance::Ex1(ex1::problem(), ex1::oracle()), ex1::config()),
        BenchmarkId::Seb1 | BenchmarkId::Seb2 => {
            let curve = if id == BenchmarkId::Seb1 { Curve::first() } else { Curve::second() };
            let p = seb::problem(curve, &id.to_string());
            let c = seb::config(&p);
            (Instance::Seb(p, seb::oracle(&curve)), c)
        }
        BenchmarkId::Ex4e { n } => {
            let p = ex4e::problem(n);
            let c = ex4e::config(&p);
            (Instance::Ex4e(p, ex4e::oracle()), c)
        }
        BenchmarkId::Ex3 { m } => (Instance::Dro(ex3::problem(m)?, m), ex3::config()),
        BenchmarkId::Ex3Inf => {
            let (p, o) = ex3::sp_problem()?;
            (Instance::Sp(p, o), ex3::config())
        }
    };
    Ok(Benchmark { id, instance, config })
}

fn solve_one<F, O>(p: &SicpProblem<F>, o: &mut O, config: &SolverConfig, options: &MasterOptions) -> Result<SolveResult>
where
    F: SemiInfiniteFamily,
    O: SeparationOracle<F>,
{
    run_with(p, o, config, options)
}

/// Problem-level data shared by every instance.
struct Shape<'a> {
    slater: &'a SlaterInfo,
    bound: f64,
    dim: usize,
}

impl Benchmark {
    fn shape(&self) -> Shape<'_> {
        macro_rules! shape {
            ($p:expr) => {
                Shape { slater: &$p.slater, bound: $p.subgradient_bound, dim: $p.dim() }
            };
        }
        match &self.instance {
            Instance::Ex1(p, _) => shape!(p),
            Instance::Seb(p, _) => shape!(p),
            Instance::Ex4e(p, _) => shape!(p),
            Instance::Dro(p, _) => shape!(p),
            Instance::Sp(p, _) => shape!(p),
        }
    }

    pub fn dim(&self) -> usize {
        self.shape().dim
    }

    pub fn slater(&self) -> &SlaterInfo {
        self.shape().slater
    }

    pub fn subgradient_bound(&self) -> f64 {
        self.shape().bound
    }

    pub fn solve(&mut self, config: &SolverConfig) -> Result<SolveResult> {
        let options = MasterOptions { kind: config.master, ..MasterOptions::default() };
        self.solve_with(config, &options)
    }

    pub fn solve_with(&mut self, config: &SolverConfig, options: &MasterOptions) -> Result<SolveResult> {
        match &mut self.instance {
            Instance::Ex1(p, o) => solve_one(p, o, config, options),
            Instance::Seb(p, o) => solve_one(p, o, config, options),
            Instance::Ex4e(p, o) => solve_one(p, o, config, options),
            Instance::Dro(p, m) => solve_one(p, &mut ex3::oracle(*m, config.rng_seed)?, config, options),
            Instance::Sp(p, o) => solve_one(p, o, config, options),
        }
    }

    /// `max_t g(x, t)` and the static violation, through this benchmark's
    /// oracle (a fresh one seeded with `seed` for the randomized case).
    pub fn max_violation(&mut self, x: &DVector<f64>, seed: u64) -> Result<f64> {
        macro_rules! viol {
            ($p:expr, $o:expr) => {
                Ok($o.max_violation(&$p.family, x)?.max($p.static_violation(x)))
            };
        }
        match &mut self.instance {
            Instance::Ex1(p, o) => viol!(p, o),
            Instance::Seb(p, o) => viol!(p, o),
            Instance::Ex4e(p, o) => viol!(p, o),
            Instance::Dro(p, m) => viol!(p, ex3::oracle(*m, seed)?),
            Instance::Sp(p, o) => viol!(p, o),
        }
    }

    /// Known optimal objective, in the problem's own objective coordinate
    /// (the squared radius for the circle problems).
    pub fn reference_objective(&self) -> Result<f64> {
        Ok(match self.id {
            BenchmarkId::Ex1 => ex1::optimum().2,
            BenchmarkId::Seb1 => 5.5 * 5.5,
            BenchmarkId::Seb2 => seb2_reference()?,
            BenchmarkId::Ex4e { n } => ex4e::optimal_value(n),
            BenchmarkId::Ex3 { m } => ex3::reference_objective(m)?,
            BenchmarkId::Ex3Inf => ex3::sp_reference_objective(),
        })
    }

    /// Known optimal point where the problem fixes one.
    pub fn reference_point(&self) -> Option<DVector<f64>> {
        match self.id {
            BenchmarkId::Ex1 => {
                let (x1, x2, z) = ex1::optimum();
                Some(DVector::from_vec(vec![z, x1, x2]))
            }
            BenchmarkId::Seb1 => Some(DVector::from_vec(vec![30.25, 0.0, 0.0])),
            BenchmarkId::Ex4e { n } => {
                let mut x = DVector::from_element(n + 1, 1.0 / n as f64);
                x[0] = ex4e::optimal_value(n);
                Some(x)
            }
            _ => None,
        }
    }

    /// Inputs of the rate and `mu0` checks for runs under `config`.
    pub fn rate_inputs(&self, config: &SolverConfig) -> Result<RateInputs> {
        let s = self.shape();
        Ok(RateInputs::new(self.reference_objective()?, config.upper_bound, s.slater.eta, s.slater.xbar[0], s.bound))
    }
}

/// The seb2 optimum has no closed form: a tight surface solve stands in.
fn seb2_reference() -> Result<f64> {
    use std::sync::OnceLock;
    static CACHE: OnceLock<f64> = OnceLock::new();
    if let Some(v) = CACHE.get() {
        return Ok(*v);
    }
    let curve = Curve::second();
    let p = seb::problem(curve, "seb2");
    let mut c = seb::config(&p);
    c.sigma_tol = 1e-11;
    let r = crate::cutting::run(&p, &mut seb::oracle(&curve), &c)?;
    Ok(*CACHE.get_or_init(|| r.objective))
}
