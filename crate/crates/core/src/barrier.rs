//! Log-barrier method with damped Newton centering.
//!
//! Solves `minimize f(v) s.t. c_i(v) <= 0` for smooth convex `f`, `c_i` from a
//! strictly feasible start, following the central path of
//! `f(v) - w sum log(-c_i(v))` while the barrier weight `w` shrinks
//! geometrically. Multipliers are read off the path (`w / -c_i`) and then
//! polished so that stationarity holds to working precision.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// One constraint (or the objective) evaluated at a point.
#[derive(Debug, Clone)]
pub struct SmoothEval {
    pub value: f64,
    pub gradient: DVector<f64>,
    /// `None` for affine functions.
    pub hessian: Option<DMatrix<f64>>,
}

pub trait BarrierProblem {
    fn dim(&self) -> usize;
    fn num_constraints(&self) -> usize;
    fn objective(&self, v: &DVector<f64>) -> Result<SmoothEval>;
    fn objective_value(&self, v: &DVector<f64>) -> Result<f64> {
        Ok(self.objective(v)?.value)
    }
    /// All constraint values; used by the line search.
    fn constraint_values(&self, v: &DVector<f64>, out: &mut Vec<f64>) -> Result<()>;
    /// All constraints with derivatives.
    fn constraint_evals(&self, v: &DVector<f64>) -> Result<Vec<SmoothEval>>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierSettings {
    pub initial_weight: f64,
    pub decrease: f64,
    /// Stop once `m * w` (the duality-gap estimate) falls below this.
    pub gap_tol: f64,
    /// Optional relative target: also require `m * w <= rel_gap * |f|`,
    /// floored at `gap_floor`.
    pub rel_gap: Option<f64>,
    pub gap_floor: f64,
    /// Newton stops when half the scaled squared decrement is below this.
    pub newton_tol: f64,
    /// Looser decrement test for stages before the last.
    pub stage_tol: f64,
    pub max_newton_per_stage: usize,
    pub max_stages: usize,
    pub armijo: f64,
}

impl Default for BarrierSettings {
    fn default() -> Self {
        Self {
            initial_weight: 1.0,
            decrease: 0.05,
            gap_tol: 1e-9,
            rel_gap: None,
            gap_floor: 1e-15,
            newton_tol: 1e-11,
            stage_tol: 1e-4,
            max_newton_per_stage: 200,
            max_stages: 200,
            armijo: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BarrierResult {
    pub v: DVector<f64>,
    pub objective: f64,
    pub weight: f64,
    /// Lagrange multipliers, one per constraint.
    pub duals: Vec<f64>,
    /// `sum_i duals_i * |c_i(v)|` after polishing.
    pub gap: f64,
    pub newton_steps: usize,
}

fn barrier_value<P: BarrierProblem + ?Sized>(
    problem: &P,
    v: &DVector<f64>,
    w: f64,
    scratch: &mut Vec<f64>,
) -> Result<Option<f64>> {
    problem.constraint_values(v, scratch)?;
    let mut acc = 0.0;
    for &c in scratch.iter() {
        if !(c < 0.0) {
            return Ok(None);
        }
        acc -= (-c).ln();
    }
    Ok(Some(problem.objective_value(v)? + w * acc))
}

fn solve_spd(h: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let scale = h.diagonal().iter().fold(0.0_f64, |m, d| m.max(d.abs())).max(1e-300);
    let mut ridge = 0.0;
    for _ in 0..12 {
        let mut m = h.clone();
        if ridge > 0.0 {
            for i in 0..m.nrows() {
                m[(i, i)] += ridge;
            }
        }
        if let Some(ch) = Cholesky::new(m) {
            let sol = ch.solve(rhs);
            if sol.iter().all(|v| v.is_finite()) {
                return Ok(sol);
            }
        }
        ridge = if ridge == 0.0 { scale * 1e-14 } else { ridge * 100.0 };
    }
    Err(Error::Numerical("Newton system is not positive definite".into()))
}

/// Damped Newton on `f - w sum log(-c_i)` until the decrement test with
/// `tol` passes or progress stalls. Returns the number of steps taken.
fn center<P: BarrierProblem + ?Sized>(
    problem: &P,
    v: &mut DVector<f64>,
    w: f64,
    tol: f64,
    settings: &BarrierSettings,
    scratch: &mut Vec<f64>,
) -> Result<usize> {
    let n = problem.dim();
    let mut steps = 0;
    let mut stalled = 0;
    for _ in 0..settings.max_newton_per_stage {
        let obj = problem.objective(v)?;
        let cons = problem.constraint_evals(v)?;
        let mut grad = obj.gradient.clone();
        let mut hess = obj.hessian.clone().unwrap_or_else(|| DMatrix::zeros(n, n));
        // Rows of `jac` are gradients scaled by sqrt(w) / -c_i.
        let mut jac = DMatrix::zeros(cons.len(), n);
        for (r, c) in cons.iter().enumerate() {
            let inv = 1.0 / (-c.value);
            grad.axpy(w * inv, &c.gradient, 1.0);
            let root = w.sqrt() * inv;
            for j in 0..n {
                jac[(r, j)] = root * c.gradient[j];
            }
            if let Some(ch) = &c.hessian {
                hess.zip_apply(ch, |a, b| *a += w * inv * b);
            }
        }
        hess.gemm_tr(1.0, &jac, &jac, 1.0);
        let step = solve_spd(hess, &(-&grad))?;
        let slope = grad.dot(&step);
        let decrement = -slope / w;
        if !(decrement.is_finite()) {
            return Err(Error::Numerical("non-finite Newton decrement".into()));
        }
        if decrement * 0.5 <= tol {
            break;
        }
        let phi0 = barrier_value(problem, v, w, scratch)?
            .ok_or_else(|| Error::Numerical("iterate left the interior".into()))?;
        // Predicted decrease below rounding of the barrier value.
        if -slope <= 8.0 * f64::EPSILON * (1.0 + phi0.abs()) {
            break;
        }
        let mut t = 1.0;
        let mut gain = None;
        while t > 1e-16 {
            let trial = &*v + &step * t;
            if let Some(phi) = barrier_value(problem, &trial, w, scratch)? {
                if phi <= phi0 + settings.armijo * t * slope {
                    *v = trial;
                    gain = Some(phi0 - phi);
                    break;
                }
            }
            t *= 0.5;
        }
        steps += 1;
        match gain {
            Some(g) if g > 4.0 * f64::EPSILON * (1.0 + phi0.abs()) => stalled = 0,
            Some(_) => stalled += 1,
            None => break,
        }
        if stalled >= 3 {
            break;
        }
    }
    Ok(steps)
}

/// Runs the barrier method from the strictly feasible point `start`.
pub fn solve<P: BarrierProblem + ?Sized>(
    problem: &P,
    start: DVector<f64>,
    settings: &BarrierSettings,
) -> Result<BarrierResult> {
    let m = problem.num_constraints();
    let mut scratch = Vec::with_capacity(m);
    let mut v = start;
    let mut w = settings.initial_weight;
    if barrier_value(problem, &v, w, &mut scratch)?.is_none() {
        return Err(Error::MasterInfeasible("barrier start is not strictly feasible".into()));
    }
    let target = |f: f64| match settings.rel_gap {
        Some(rel) => settings.gap_tol.min((rel * f.abs()).max(settings.gap_floor)),
        None => settings.gap_tol,
    };
    let mut newton_steps = 0;

    for _stage in 0..settings.max_stages {
        // Intermediate stages are centered loosely; the last one tightly.
        newton_steps += center(problem, &mut v, w, settings.stage_tol.max(settings.newton_tol), settings, &mut scratch)?;
        let f = problem.objective_value(&v)?;
        if (m as f64) * w <= target(f) {
            newton_steps += center(problem, &mut v, w, settings.newton_tol, settings, &mut scratch)?;
            let f = problem.objective_value(&v)?;
            let (duals, gap) = polished_duals(problem, &v, w)?;
            return Ok(BarrierResult { v, objective: f, weight: w, duals, gap, newton_steps });
        }
        w *= settings.decrease;
    }
    Err(Error::InnerIterationLimit(format!(
        "barrier weight {w:e} after {} stages",
        settings.max_stages
    )))
}

/// Path multipliers `w / -c_i`, corrected by a weighted least-squares step so
/// that `grad f + sum lambda_i grad c_i = 0` holds at `v`.
fn polished_duals<P: BarrierProblem + ?Sized>(
    problem: &P,
    v: &DVector<f64>,
    w: f64,
) -> Result<(Vec<f64>, f64)> {
    let n = problem.dim();
    let obj = problem.objective(v)?;
    let cons = problem.constraint_evals(v)?;
    let path: Vec<f64> = cons.iter().map(|c| w / (-c.value)).collect();

    let residual_of = |lam: &[f64]| {
        let mut r = obj.gradient.clone();
        for (c, l) in cons.iter().zip(lam) {
            r.axpy(*l, &c.gradient, 1.0);
        }
        r
    };
    // A few weighted least-squares corrections, each scaled by the current
    // multipliers; far along the path the first estimate can be poor.
    let mut duals = path;
    let mut res = residual_of(&duals).norm();
    let floor = 1e-13 * (1.0 + obj.gradient.norm());
    for _ in 0..4 {
        if res <= floor {
            break;
        }
        let r = residual_of(&duals);
        let mut normal = DMatrix::zeros(n, n);
        for (c, l) in cons.iter().zip(&duals) {
            normal.ger(l * l, &c.gradient, &c.gradient, 1.0);
        }
        let trace = normal.trace().max(1e-300);
        for i in 0..n {
            normal[(i, i)] += 1e-13 * trace / n as f64;
        }
        let Some(ch) = Cholesky::new(normal) else { break };
        let y = ch.solve(&r);
        let corrected: Vec<f64> = cons
            .iter()
            .zip(&duals)
            .map(|(c, l)| (l - l * l * c.gradient.dot(&y)).max(0.0))
            .collect();
        let next = residual_of(&corrected).norm();
        if !(next < res) {
            break;
        }
        duals = corrected;
        res = next;
    }
    let gap = cons.iter().zip(&duals).map(|(c, l)| l * c.value.abs()).sum();
    Ok((duals, gap))
}
