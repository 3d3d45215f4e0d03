//! Semi-infinite convex programs: `minimize x0 s.t. g(x,t) <= 0 for all t in T, x in X`.
//!
//! The first coordinate of the decision vector is always the objective. A
//! general convex objective `f(x)` is folded in by giving `x0` a box and adding
//! the static constraint `f(x) - x0 <= 0`.

use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Closed, bounded box `X = [lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl DecisionBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::InvalidProblem(format!(
                "box bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !l.is_finite() || !u.is_finite() {
                return Err(Error::InvalidProblem(format!("box coordinate {i} is unbounded")));
            }
            if l > u {
                return Err(Error::InvalidProblem(format!(
                    "box coordinate {i}: lower {l} > upper {u}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    /// Smallest distance from `x` to a face of the box (negative outside).
    pub fn interior_margin(&self, x: &DVector<f64>) -> f64 {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| (v - l).min(u - v))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn clamp(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            x.len(),
            x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .map(|(v, (l, u))| v.clamp(*l, *u)),
        )
    }
}

/// A deterministic convex constraint `c(x) <= 0` that is part of `X`.
pub trait StaticConstraint: Send + Sync {
    /// Value and a (sub)gradient at `x`.
    fn eval(&self, x: &DVector<f64>) -> (f64, DVector<f64>);

    /// Hessian at `x`, when available in closed form.
    fn hessian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }
}

/// Epigraph of a convex objective: `f(x) - x0 <= 0`.
pub struct Epigraph<Fv, Fh>
where
    Fv: Fn(&DVector<f64>) -> (f64, DVector<f64>) + Send + Sync,
    Fh: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync,
{
    objective: Fv,
    hessian: Fh,
}

impl<Fv, Fh> Epigraph<Fv, Fh>
where
    Fv: Fn(&DVector<f64>) -> (f64, DVector<f64>) + Send + Sync,
    Fh: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync,
{
    /// `objective` gets the full decision vector and must ignore coordinate 0.
    pub fn new(objective: Fv, hessian: Fh) -> Self {
        Self { objective, hessian }
    }
}

impl<Fv, Fh> StaticConstraint for Epigraph<Fv, Fh>
where
    Fv: Fn(&DVector<f64>) -> (f64, DVector<f64>) + Send + Sync,
    Fh: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync,
{
    fn eval(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let (f, mut grad) = (self.objective)(x);
        grad[0] -= 1.0;
        (f - x[0], grad)
    }

    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some((self.hessian)(x))
    }
}

/// The semi-infinite constraint family `g(x, t)`.
///
/// Index tokens are opaque to the solver: an interval parameter, a discrete
/// distribution, or anything else the family's oracle hands out.
pub trait SemiInfiniteFamily: Send + Sync {
    type Index: Clone + Debug + Send + Sync;

    /// `g(x, t)` and some `d` in the subdifferential with respect to `x`.
    fn evaluate(&self, x: &DVector<f64>, t: &Self::Index) -> Result<(f64, DVector<f64>)>;

    /// Hessian of `g(., t)` at `x` if it exists in closed form. `Ok(None)`
    /// means "not supplied"; the barrier master then differences gradients.
    fn hessian(&self, _x: &DVector<f64>, _t: &Self::Index) -> Result<Option<DMatrix<f64>>> {
        Ok(None)
    }

    /// Whether `g(., t)` is twice differentiable, so that the barrier master
    /// applies.
    fn is_smooth(&self) -> bool {
        true
    }
}

/// Slater point `xbar` with uniform margin `g(xbar, t) <= -eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlaterInfo {
    pub xbar: DVector<f64>,
    pub eta: f64,
}

/// How the centering parameter `s` of each new cut is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CenteringStrategy {
    /// `s = value` for every cut.
    Constant(f64),
    /// `s = fraction * ||d||` clipped into `[s_min, s_max]`.
    Clamped { fraction: f64, s_min: f64, s_max: f64 },
    /// `s = alpha * ||d||`.
    GradientFraction(f64),
    /// `s = 0`: plain constraint generation.
    None,
}

impl CenteringStrategy {
    fn validate(&self, bound: f64) -> Result<()> {
        match *self {
            CenteringStrategy::Constant(s) => {
                if !(s > 0.0) || s > bound {
                    return Err(Error::InvalidConfig(format!(
                        "constant centering {s} must lie in (0, B = {bound}]"
                    )));
                }
            }
            CenteringStrategy::Clamped { fraction, s_min, s_max } => {
                if !(s_min > 0.0) || s_min > s_max || s_max > bound || !(fraction > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "clamped centering needs 0 < s_min <= s_max <= B = {bound}, fraction > 0"
                    )));
                }
            }
            CenteringStrategy::GradientFraction(alpha) => {
                if !(alpha > 0.0 && alpha <= 1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "gradient fraction {alpha} must lie in (0, 1]"
                    )));
                }
            }
            CenteringStrategy::None => {}
        }
        Ok(())
    }
}

/// Cut geometry used by the cutting loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutMethod {
    /// Nonlinear cuts `g(x, t_j) + sigma s_j <= 0`.
    Surface,
    /// Linearized cuts (central cutting plane baseline).
    Plane,
}

/// Inner solver for the restricted master problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MasterKind {
    /// Barrier when the family is smooth, bundle otherwise.
    Auto,
    Barrier,
    Bundle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Strict upper bound `U` on the optimal objective.
    pub upper_bound: f64,
    /// Bound `B` on subgradient norms.
    pub subgradient_bound: f64,
    pub epsilon: f64,
    /// Cut-drop aggressiveness; `f64::INFINITY` disables dropping.
    pub beta: f64,
    /// Termination threshold on `sigma`.
    pub sigma_tol: f64,
    pub centering: CenteringStrategy,
    pub max_iters: usize,
    pub rng_seed: u64,
    pub method: CutMethod,
    pub master: MasterKind,
}

impl SolverConfig {
    pub fn new(upper_bound: f64, subgradient_bound: f64) -> Self {
        Self {
            upper_bound,
            subgradient_bound,
            epsilon: 0.0,
            beta: f64::INFINITY,
            sigma_tol: 1e-7,
            centering: CenteringStrategy::Constant(1.0),
            max_iters: 10_000,
            rng_seed: 0,
            method: CutMethod::Surface,
            master: MasterKind::Auto,
        }
    }
}

pub struct SicpProblem<F: SemiInfiniteFamily> {
    pub name: String,
    pub bounds: DecisionBox,
    pub statics: Vec<Arc<dyn StaticConstraint>>,
    pub family: F,
    pub slater: SlaterInfo,
    pub subgradient_bound: f64,
    /// Objective value of some known feasible point, if any.
    pub known_feasible_objective: Option<f64>,
}

impl<F: SemiInfiniteFamily> SicpProblem<F> {
    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    /// Largest static-constraint value at `x` (`-inf` without statics).
    pub fn static_violation(&self, x: &DVector<f64>) -> f64 {
        self.statics
            .iter()
            .map(|c| c.eval(x).0)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `g(x, t)` with the subgradient bound enforced.
pub fn evaluate_constraint<F: SemiInfiniteFamily>(
    problem: &SicpProblem<F>,
    x: &DVector<f64>,
    t: &F::Index,
) -> Result<(f64, DVector<f64>)> {
    if x.len() != problem.dim() {
        return Err(Error::InvalidProblem(format!(
            "decision vector has length {}, expected {}",
            x.len(),
            problem.dim()
        )));
    }
    let (value, grad) = problem.family.evaluate(x, t)?;
    let norm = grad.norm();
    if norm > problem.subgradient_bound + 1e-12 {
        return Err(Error::SubgradientBound { norm, bound: problem.subgradient_bound });
    }
    Ok((value, grad))
}

/// Checks `config` against its own invariants and against `problem`.
pub fn validate_config<F: SemiInfiniteFamily>(
    config: &SolverConfig,
    problem: &SicpProblem<F>,
) -> Result<SolverConfig> {
    if !(config.beta > 1.0) {
        return Err(Error::InvalidConfig(format!("beta = {} must exceed 1", config.beta)));
    }
    if !(config.sigma_tol > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "sigma_tol = {} must be positive",
            config.sigma_tol
        )));
    }
    if !(config.epsilon >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "epsilon = {} must be nonnegative",
            config.epsilon
        )));
    }
    if !(config.subgradient_bound > 0.0) {
        return Err(Error::InvalidConfig("subgradient bound B must be positive".into()));
    }
    if config.max_iters == 0 {
        return Err(Error::InvalidConfig("max_iters must be positive".into()));
    }
    config.centering.validate(config.subgradient_bound)?;
    if !config.upper_bound.is_finite() {
        return Err(Error::InvalidConfig("upper bound U must be finite".into()));
    }
    if let Some(known) = problem.known_feasible_objective {
        if config.upper_bound <= known {
            return Err(Error::InvalidConfig(format!(
                "U = {} does not exceed the known feasible objective {known}",
                config.upper_bound
            )));
        }
    }
    if config.upper_bound > problem.bounds.upper()[0] {
        return Err(Error::InvalidConfig(format!(
            "U = {} lies above the objective coordinate's box bound {}",
            config.upper_bound,
            problem.bounds.upper()[0]
        )));
    }
    if config.master == MasterKind::Bundle && config.centering == CenteringStrategy::None {
        return Err(Error::InvalidConfig(
            "the bundle master needs strictly positive centering".into(),
        ));
    }
    Ok(config.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Linear;

    impl SemiInfiniteFamily for Linear {
        type Index = f64;
        fn evaluate(&self, x: &DVector<f64>, t: &f64) -> Result<(f64, DVector<f64>)> {
            Ok((t * x[1] - 1.0, DVector::from_vec(vec![0.0, *t])))
        }
    }

    fn problem() -> SicpProblem<Linear> {
        SicpProblem {
            name: "linear".into(),
            bounds: DecisionBox::new(vec![0.0, -1.0], vec![2.0, 1.0]).unwrap(),
            statics: vec![],
            family: Linear,
            slater: SlaterInfo { xbar: DVector::from_vec(vec![1.0, 0.0]), eta: 1.0 },
            subgradient_bound: 2.0,
            known_feasible_objective: Some(0.5),
        }
    }

    #[test]
    fn box_rejects_inverted_and_unbounded() {
        assert!(DecisionBox::new(vec![1.0], vec![0.0]).is_err());
        assert!(DecisionBox::new(vec![0.0], vec![f64::INFINITY]).is_err());
        assert!(DecisionBox::new(vec![0.0, 0.0], vec![1.0]).is_err());
        let b = DecisionBox::new(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert!(b.contains(&DVector::from_vec(vec![0.5, 0.0])));
        assert!((b.interior_margin(&DVector::from_vec(vec![0.25, 0.0])) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn subgradient_bound_enforced() {
        let p = problem();
        let x = DVector::from_vec(vec![1.0, 0.5]);
        assert!(evaluate_constraint(&p, &x, &1.5).is_ok());
        assert!(matches!(
            evaluate_constraint(&p, &x, &3.0),
            Err(Error::SubgradientBound { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let p = problem();
        let ok = SolverConfig::new(1.0, 2.0);
        assert!(validate_config(&ok, &p).is_ok());

        let mut bad = ok.clone();
        bad.beta = 1.0;
        assert!(validate_config(&bad, &p).is_err());

        let mut bad = ok.clone();
        bad.sigma_tol = 0.0;
        assert!(validate_config(&bad, &p).is_err());

        let mut bad = ok.clone();
        bad.centering = CenteringStrategy::Constant(3.0);
        assert!(validate_config(&bad, &p).is_err());

        let mut bad = ok.clone();
        bad.upper_bound = 0.4;
        assert!(validate_config(&bad, &p).is_err());

        let mut bad = ok.clone();
        bad.centering = CenteringStrategy::GradientFraction(1.5);
        assert!(validate_config(&bad, &p).is_err());

        let mut inf_beta = ok;
        inf_beta.beta = f64::INFINITY;
        assert!(validate_config(&inf_beta, &p).is_ok());
    }
}
