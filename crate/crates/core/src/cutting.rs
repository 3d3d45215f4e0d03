//! The central cutting-surface loop and its cutting-plane special case.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::master::{self, cut_value, MasterOptions, MasterSolution, MasterState};
use crate::problem::{
    evaluate_constraint, validate_config, CenteringStrategy, CutMethod, SemiInfiniteFamily,
    SicpProblem, SolverConfig,
};

#[derive(Debug, Clone, PartialEq)]
pub enum CutKind {
    /// `g(x, t) + sigma s <= 0`.
    Surface,
    /// `g_val + d.(x - anchor) + sigma s <= 0`.
    Planar { anchor: DVector<f64>, g_val: f64, d: DVector<f64> },
}

/// What a cut was generated from.
#[derive(Debug, Clone, PartialEq)]
pub enum CutIndex<I> {
    Family(I),
    /// Linearization of the static constraint with this position; plane
    /// method only.
    Static(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cut<I> {
    pub id: usize,
    pub index: CutIndex<I>,
    pub kind: CutKind,
    pub s: f64,
    pub sigma_at_creation: f64,
    /// Iteration that generated the cut.
    pub created_at: usize,
}

pub fn make_surface_cut<I>(id: usize, index: I, s: f64, sigma_at_creation: f64, created_at: usize) -> Cut<I> {
    Cut { id, index: CutIndex::Family(index), kind: CutKind::Surface, s, sigma_at_creation, created_at }
}

/// Linearization of `g(., t)` at `anchor`. `bound` is the subgradient bound `B`.
pub fn make_planar_cut<I>(
    id: usize,
    anchor: DVector<f64>,
    index: CutIndex<I>,
    g_val: f64,
    d: DVector<f64>,
    s: f64,
    bound: f64,
) -> Result<Cut<I>> {
    let norm = d.norm();
    if norm > bound + 1e-12 {
        return Err(Error::SubgradientBound { norm, bound });
    }
    Ok(Cut {
        id,
        index,
        kind: CutKind::Planar { anchor, g_val, d },
        s,
        sigma_at_creation: f64::NAN,
        created_at: 0,
    })
}

impl<I> Cut<I> {
    /// Left-hand side of the stored constraint at `(x, sigma)`, for planar cuts.
    pub fn planar_value(&self, x: &DVector<f64>, sigma: f64) -> Option<f64> {
        match &self.kind {
            CutKind::Planar { anchor, g_val, d } => Some(affine_value(anchor, *g_val, d, x) + sigma * self.s),
            CutKind::Surface => None,
        }
    }
}

/// `g_val + d . (x - anchor)` without a temporary.
pub(crate) fn affine_value(anchor: &DVector<f64>, g_val: f64, d: &DVector<f64>, x: &DVector<f64>) -> f64 {
    let (d, x, a) = (d.as_slice(), x.as_slice(), anchor.as_slice());
    let mut acc = g_val;
    for i in 0..d.len() {
        acc += d[i] * (x[i] - a[i]);
    }
    acc
}

/// Weak separation: some `t` with `g(x, t) > eps` when one can be found.
pub trait SeparationOracle<F: SemiInfiniteFamily> {
    fn separate(&mut self, family: &F, x: &DVector<f64>, eps: f64) -> Result<Option<F::Index>>;

    /// Best available estimate of `max_t g(x, t)`, used to certify the result.
    fn max_violation(&mut self, family: &F, x: &DVector<f64>) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutType {
    Feasibility,
    Optimality,
    /// The final master solve with `sigma < sigma_tol`.
    Stop,
}

impl CutType {
    pub fn as_str(self) -> &'static str {
        match self {
            CutType::Feasibility => "feasibility",
            CutType::Optimality => "optimality",
            CutType::Stop => "stop",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub sigma: f64,
    /// `y0` after this iteration.
    pub y0: f64,
    pub cut_type: CutType,
    pub mu0: Option<f64>,
    pub m_sum: Option<f64>,
    pub dual_residual: Option<f64>,
    /// `(cut id, slack at x^k)` of every cut removed this iteration.
    pub dropped: Vec<(usize, f64)>,
    /// Master center `x^k`.
    pub x: DVector<f64>,
    pub active_cuts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    IterLimit,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "Converged",
            SolveStatus::IterLimit => "IterLimit",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub y: DVector<f64>,
    pub objective: f64,
    pub history: Vec<IterationRecord>,
    pub status: SolveStatus,
    /// `max_t g(y, t)` from a final oracle sweep.
    pub final_violation: f64,
    /// `final_violation <= epsilon` (with rounding slack).
    pub certified: bool,
}

impl SolveResult {
    pub fn feasibility_cuts(&self) -> usize {
        self.history.iter().filter(|r| r.cut_type == CutType::Feasibility).count()
    }

    pub fn optimality_cuts(&self) -> usize {
        self.history.iter().filter(|r| r.cut_type == CutType::Optimality).count()
    }
}

pub fn centering_value(strategy: &CenteringStrategy, subgradient_norm: f64) -> Result<f64> {
    if !(subgradient_norm >= 0.0) {
        return Err(Error::InvalidProblem(format!("subgradient norm {subgradient_norm}")));
    }
    match *strategy {
        CenteringStrategy::Constant(s) => Ok(s),
        CenteringStrategy::GradientFraction(alpha) => {
            if subgradient_norm == 0.0 {
                Err(Error::ZeroSubgradient)
            } else {
                Ok(alpha * subgradient_norm)
            }
        }
        CenteringStrategy::Clamped { fraction, s_min, s_max } => {
            Ok((fraction * subgradient_norm).clamp(s_min, s_max))
        }
        CenteringStrategy::None => Ok(0.0),
    }
}

pub const DROP_TOL: f64 = 1e-9;

/// The two clauses of the drop rule.
pub fn should_drop(sigma_j: f64, sigma_k: f64, beta: f64, slack: f64) -> bool {
    beta.is_finite() && sigma_j >= beta * sigma_k && slack < 0.0
}

/// Removes every cut with `sigma_j >= beta sigma_k` that is strictly slack at
/// the current center. Returns `(id, slack)` for each removed cut.
///
/// Interior-point centers leave every cut slightly slack, active ones
/// included, so "strictly" means below `-DROP_TOL (1 + |y0|)`.
pub fn drop_cuts<F: SemiInfiniteFamily>(
    state: &mut MasterState<'_, F>,
    solution: &MasterSolution,
    beta: f64,
) -> Result<Vec<(usize, f64)>> {
    if !beta.is_finite() {
        return Ok(Vec::new());
    }
    let family = &state.problem.family;
    let margin = DROP_TOL * (1.0 + state.y0_prev.abs());
    let mut removed = Vec::new();
    let mut keep = Vec::with_capacity(state.cuts.len());
    for cut in state.cuts.drain(..) {
        let slack = cut_value(family, &cut, &solution.x)? + solution.sigma * cut.s;
        if should_drop(cut.sigma_at_creation, solution.sigma, beta, slack + margin) {
            removed.push((cut.id, slack));
        } else {
            keep.push(cut);
        }
    }
    state.cuts = keep;
    Ok(removed)
}

fn check_slater<F: SemiInfiniteFamily>(problem: &SicpProblem<F>, t: &F::Index) -> Result<()> {
    let (value, _) = problem.family.evaluate(&problem.slater.xbar, t)?;
    let eta = problem.slater.eta;
    if value > -eta + 1e-9 * (1.0 + eta) {
        return Err(Error::SlaterViolated { value, neg_eta: -eta });
    }
    Ok(())
}

pub fn run<F, O>(problem: &SicpProblem<F>, oracle: &mut O, config: &SolverConfig) -> Result<SolveResult>
where
    F: SemiInfiniteFamily,
    O: SeparationOracle<F> + ?Sized,
{
    let options = MasterOptions { kind: config.master, ..MasterOptions::default() };
    run_with(problem, oracle, config, &options)
}

pub fn run_with<F, O>(
    problem: &SicpProblem<F>,
    oracle: &mut O,
    config: &SolverConfig,
    options: &MasterOptions,
) -> Result<SolveResult>
where
    F: SemiInfiniteFamily,
    O: SeparationOracle<F> + ?Sized,
{
    let config = validate_config(config, problem)?;
    let n = problem.dim();
    let mut y = problem.bounds.clamp(&DVector::zeros(n));
    y[0] = config.upper_bound;
    let mut state = MasterState::new(problem, config.upper_bound);
    state.include_statics = config.method == CutMethod::Surface;
    let mut history = Vec::new();
    let mut next_id = 0;
    let mut status = SolveStatus::IterLimit;

    for k in 1..=config.max_iters {
        let sol = master::solve_master(&state, options)?;
        let (mu0, m_sum, dual_residual) = if sol.dual_available {
            (
                Some(sol.mu0),
                Some(sol.mu.iter().sum()),
                Some(master::check_dual_identity(&sol, &state.cuts)?),
            )
        } else {
            (None, None, None)
        };
        let mut record = IterationRecord {
            k,
            sigma: sol.sigma,
            y0: state.y0_prev,
            cut_type: CutType::Stop,
            mu0,
            m_sum,
            dual_residual,
            dropped: Vec::new(),
            x: sol.x.clone(),
            active_cuts: state.cuts.len(),
        };
        if sol.sigma < config.sigma_tol {
            history.push(record);
            status = SolveStatus::Converged;
            break;
        }

        let planar = config.method == CutMethod::Plane;
        let found = oracle.separate(&problem.family, &sol.x, config.epsilon)?;
        let mut violated = match found {
            Some(t) => {
                check_slater(problem, &t)?;
                let (g, d) = evaluate_constraint(problem, &sol.x, &t)?;
                Some((CutIndex::Family(t), g, d))
            }
            None => None,
        };
        if planar {
            // The plane method linearizes static constraints as well.
            for (i, c) in problem.statics.iter().enumerate() {
                let (g, d) = c.eval(&sol.x);
                let worse = match &violated {
                    Some((_, best, _)) => g > *best,
                    None => g > config.epsilon,
                };
                if worse {
                    violated = Some((CutIndex::Static(i), g, d));
                }
            }
        }

        match violated {
            Some((index, g, d)) => {
                let s = centering_value(&config.centering, d.norm())?;
                let mut cut = if planar {
                    make_planar_cut(next_id, sol.x.clone(), index, g, d, s, problem.subgradient_bound)?
                } else {
                    let CutIndex::Family(t) = index else { unreachable!("statics are exact in surface mode") };
                    make_surface_cut(next_id, t, s, sol.sigma, k)
                };
                cut.sigma_at_creation = sol.sigma;
                cut.created_at = k;
                next_id += 1;
                state.cuts.push(cut);
                record.cut_type = CutType::Feasibility;
            }
            None => {
                y = sol.x.clone();
                state.y0_prev = y[0];
                record.cut_type = CutType::Optimality;
            }
        }
        record.y0 = state.y0_prev;
        record.dropped = drop_cuts(&mut state, &sol, config.beta)?;
        record.active_cuts = state.cuts.len();
        history.push(record);
    }

    let final_violation = oracle
        .max_violation(&problem.family, &y)?
        .max(problem.static_violation(&y));
    let certified = final_violation <= config.epsilon + 1e-9;
    Ok(SolveResult { objective: y[0], y, history, status, final_violation, certified })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centering_examples() {
        assert_eq!(centering_value(&CenteringStrategy::Constant(1.0), 7.0).unwrap(), 1.0);
        let s = centering_value(&CenteringStrategy::GradientFraction(0.01), 5.0).unwrap();
        assert!((s - 0.05).abs() < 1e-15);
        let clamp = CenteringStrategy::Clamped { fraction: 0.01, s_min: 0.1, s_max: 10.0 };
        assert_eq!(centering_value(&clamp, 2.0).unwrap(), 0.1);
        assert_eq!(
            centering_value(&CenteringStrategy::GradientFraction(0.5), 0.0),
            Err(Error::ZeroSubgradient)
        );
        assert_eq!(centering_value(&CenteringStrategy::None, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn drop_rule_examples() {
        assert!(!should_drop(1.0, 0.1, f64::INFINITY, -0.3));
        assert!(should_drop(1.0, 0.1, 2.0, -0.3));
        assert!(!should_drop(1.0, 0.1, 2.0, 0.0));
        assert!(!should_drop(0.15, 0.1, 2.0, -0.3));
    }

    #[test]
    fn planar_cut_evaluation() {
        let d = DVector::from_vec(vec![1.0, 0.0]);
        let cut = make_planar_cut(0, DVector::zeros(2), CutIndex::Family(()), 1.0, d.clone(), 1.0, 10.0).unwrap();
        assert_eq!(cut.planar_value(&DVector::from_vec(vec![-1.0, 0.0]), 0.0), Some(0.0));
        assert_eq!(cut.planar_value(&DVector::zeros(2), 0.0), Some(1.0));
        assert!(make_planar_cut(0, DVector::zeros(2), CutIndex::<()>::Static(0), 1.0, d * 20.0, 1.0, 10.0).is_err());
    }
}
