//! Restricted master problem of the cutting-surface loop:
//!
//! ```text
//! maximize sigma
//!   s.t.  x0 + sigma <= y0_prev
//!         cut_j(x) + sigma s_j <= 0      for every stored cut j
//!         static constraints, x in box
//! ```

use nalgebra::{DMatrix, DVector};

use crate::barrier::{self, BarrierProblem, BarrierSettings, SmoothEval};
use crate::bundle::{self, BundleSettings};
use crate::cutting::{Cut, CutIndex};
use crate::error::{Error, Result};
use crate::problem::{MasterKind, SemiInfiniteFamily, SicpProblem};

#[derive(Debug, Clone, PartialEq)]
pub struct MasterSolution {
    pub x: DVector<f64>,
    pub sigma: f64,
    /// Multiplier of `x0 + sigma <= y0_prev`.
    pub mu0: f64,
    /// Per-cut multipliers, in cut order.
    pub mu: Vec<f64>,
    pub dual_available: bool,
}

pub struct MasterState<'a, F: SemiInfiniteFamily> {
    pub problem: &'a SicpProblem<F>,
    pub cuts: Vec<Cut<F::Index>>,
    pub y0_prev: f64,
    /// `false` when the static constraints are represented by cuts instead.
    pub include_statics: bool,
}

impl<'a, F: SemiInfiniteFamily> MasterState<'a, F> {
    pub fn new(problem: &'a SicpProblem<F>, y0_prev: f64) -> Self {
        Self { problem, cuts: Vec::new(), y0_prev, include_statics: true }
    }

    pub(crate) fn statics(&self) -> &'a [std::sync::Arc<dyn crate::problem::StaticConstraint>] {
        if self.include_statics {
            &self.problem.statics
        } else {
            &[]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterOptions {
    pub kind: MasterKind,
    pub barrier: BarrierSettings,
    pub bundle: BundleSettings,
}

impl Default for MasterOptions {
    fn default() -> Self {
        Self {
            kind: MasterKind::Auto,
            barrier: BarrierSettings {
                gap_tol: 1e-12,
                rel_gap: Some(1e-8),
                ..BarrierSettings::default()
            },
            bundle: BundleSettings::default(),
        }
    }
}

/// Resolves `Auto` against the problem's smoothness.
pub fn effective_kind<F: SemiInfiniteFamily>(kind: MasterKind, problem: &SicpProblem<F>) -> MasterKind {
    match kind {
        MasterKind::Auto if problem.family.is_smooth() => MasterKind::Barrier,
        MasterKind::Auto => MasterKind::Bundle,
        k => k,
    }
}

pub fn solve_master<F: SemiInfiniteFamily>(
    state: &MasterState<'_, F>,
    options: &MasterOptions,
) -> Result<MasterSolution> {
    match effective_kind(options.kind, state.problem) {
        MasterKind::Bundle => bundle::solve_master(state, &options.bundle),
        _ => solve_master_barrier(state, &options.barrier),
    }
}

/// `|mu0 + sum_j s_j mu_j - 1|`, the stationarity residual in `sigma`.
pub fn check_dual_identity<I>(solution: &MasterSolution, cuts: &[Cut<I>]) -> Result<f64> {
    if !solution.dual_available {
        return Err(Error::NoDuals);
    }
    if solution.mu.len() != cuts.len() {
        return Err(Error::InvalidProblem(format!(
            "{} multipliers for {} cuts",
            solution.mu.len(),
            cuts.len()
        )));
    }
    let weighted: f64 = cuts.iter().zip(&solution.mu).map(|(c, m)| c.s * m).sum();
    Ok((solution.mu0 + weighted - 1.0).abs())
}

/// Finite-difference Hessian from gradients (central differences).
pub(crate) fn fd_hessian(
    x: &DVector<f64>,
    mut grad: impl FnMut(&DVector<f64>) -> Result<DVector<f64>>,
) -> Result<DMatrix<f64>> {
    let n = x.len();
    let mut h = DMatrix::zeros(n, n);
    let mut probe = x.clone();
    for i in 0..n {
        let step = 1e-6 * x[i].abs().max(1.0);
        probe[i] = x[i] + step;
        let gp = grad(&probe)?;
        probe[i] = x[i] - step;
        let gm = grad(&probe)?;
        probe[i] = x[i];
        h.set_column(i, &((gp - gm) / (2.0 * step)));
    }
    Ok((&h + h.transpose()) * 0.5)
}

/// Value, gradient and Hessian (if curved) of a cut's constraint function,
/// without the `sigma s_j` term.
pub(crate) fn cut_eval<F: SemiInfiniteFamily>(
    family: &F,
    cut: &Cut<F::Index>,
    x: &DVector<f64>,
) -> Result<SmoothEval> {
    match &cut.kind {
        crate::cutting::CutKind::Planar { anchor, g_val, d } => Ok(SmoothEval {
            value: crate::cutting::affine_value(anchor, *g_val, d, x),
            gradient: d.clone(),
            hessian: None,
        }),
        crate::cutting::CutKind::Surface => {
            let t = surface_index(cut)?;
            let (value, gradient) = family.evaluate(x, t)?;
            let hessian = match family.hessian(x, t)? {
                Some(h) => h,
                None => fd_hessian(x, |p| Ok(family.evaluate(p, t)?.1))?,
            };
            Ok(SmoothEval { value, gradient, hessian: Some(hessian) })
        }
    }
}

pub(crate) fn cut_value<F: SemiInfiniteFamily>(
    family: &F,
    cut: &Cut<F::Index>,
    x: &DVector<f64>,
) -> Result<f64> {
    match &cut.kind {
        crate::cutting::CutKind::Planar { anchor, g_val, d } => Ok(crate::cutting::affine_value(anchor, *g_val, d, x)),
        crate::cutting::CutKind::Surface => Ok(family.evaluate(x, surface_index(cut)?)?.0),
    }
}

pub(crate) fn surface_index<I>(cut: &Cut<I>) -> Result<&I> {
    match &cut.index {
        CutIndex::Family(t) => Ok(t),
        CutIndex::Static(_) => Err(Error::InvalidProblem(format!(
            "surface cut {} does not carry a family index",
            cut.id
        ))),
    }
}

pub(crate) fn static_eval(
    c: &dyn crate::problem::StaticConstraint,
    x: &DVector<f64>,
) -> Result<SmoothEval> {
    let (value, gradient) = c.eval(x);
    let hessian = match c.hessian(x) {
        Some(h) => h,
        None => fd_hessian(x, |p| Ok(c.eval(p).1))?,
    };
    Ok(SmoothEval { value, gradient, hessian: Some(hessian) })
}

/// Box faces as `(coordinate, bound, is_upper)`.
pub(crate) fn box_faces<F: SemiInfiniteFamily>(problem: &SicpProblem<F>) -> Result<Vec<(usize, f64, bool)>> {
    let mut faces = Vec::with_capacity(2 * problem.dim());
    for (i, (l, u)) in problem.bounds.lower().iter().zip(problem.bounds.upper()).enumerate() {
        if !(l < u) {
            return Err(Error::InvalidProblem(format!(
                "box coordinate {i} has empty interior; interior-point masters need lower < upper"
            )));
        }
        faces.push((i, *l, false));
        faces.push((i, *u, true));
    }
    Ok(faces)
}

/// Checks that the Slater point is strictly inside the box and the static
/// constraints, as the master's interior start requires.
pub(crate) fn interior_start<F: SemiInfiniteFamily>(problem: &SicpProblem<F>) -> Result<DVector<f64>> {
    let xbar = &problem.slater.xbar;
    if problem.bounds.interior_margin(xbar) <= 0.0 {
        return Err(Error::MasterInfeasible(
            "Slater point is not interior to the decision box".into(),
        ));
    }
    if problem.static_violation(xbar) >= 0.0 {
        return Err(Error::MasterInfeasible(
            "Slater point does not strictly satisfy the static constraints".into(),
        ));
    }
    Ok(xbar.clone())
}

struct BarrierMaster<'s, 'a, F: SemiInfiniteFamily> {
    state: &'s MasterState<'a, F>,
    n: usize,
    faces: Vec<(usize, f64, bool)>,
}

impl<F: SemiInfiniteFamily> BarrierMaster<'_, '_, F> {
    fn sigma(v: &DVector<f64>) -> f64 {
        v[v.len() - 1]
    }
}

impl<F: SemiInfiniteFamily> BarrierProblem for BarrierMaster<'_, '_, F> {
    fn dim(&self) -> usize {
        self.n + 1
    }

    fn num_constraints(&self) -> usize {
        1 + self.state.cuts.len() + self.state.statics().len() + self.faces.len()
    }

    fn objective(&self, v: &DVector<f64>) -> Result<SmoothEval> {
        let mut gradient = DVector::zeros(self.n + 1);
        gradient[self.n] = -1.0;
        Ok(SmoothEval { value: -Self::sigma(v), gradient, hessian: None })
    }

    fn objective_value(&self, v: &DVector<f64>) -> Result<f64> {
        Ok(-Self::sigma(v))
    }

    fn constraint_values(&self, v: &DVector<f64>, out: &mut Vec<f64>) -> Result<()> {
        out.clear();
        let x = v.rows(0, self.n).into_owned();
        let sigma = Self::sigma(v);
        let problem = self.state.problem;
        out.push(x[0] + sigma - self.state.y0_prev);
        for cut in &self.state.cuts {
            out.push(cut_value(&problem.family, cut, &x)? + sigma * cut.s);
        }
        for c in self.state.statics() {
            out.push(c.eval(&x).0);
        }
        for &(i, b, upper) in &self.faces {
            out.push(if upper { x[i] - b } else { b - x[i] });
        }
        Ok(())
    }

    fn constraint_evals(&self, v: &DVector<f64>) -> Result<Vec<SmoothEval>> {
        let n = self.n;
        let x = v.rows(0, n).into_owned();
        let sigma = Self::sigma(v);
        let problem = self.state.problem;
        let lift = |e: SmoothEval, sigma_coef: f64| {
            let mut gradient = DVector::zeros(n + 1);
            gradient.rows_mut(0, n).copy_from(&e.gradient);
            gradient[n] = sigma_coef;
            let hessian = e.hessian.map(|h| {
                let mut big = DMatrix::zeros(n + 1, n + 1);
                big.view_mut((0, 0), (n, n)).copy_from(&h);
                big
            });
            SmoothEval { value: e.value + sigma_coef * sigma, gradient, hessian }
        };
        let mut out = Vec::with_capacity(self.num_constraints());
        let mut g0 = DVector::zeros(n);
        g0[0] = 1.0;
        out.push(lift(
            SmoothEval { value: x[0] - self.state.y0_prev, gradient: g0, hessian: None },
            1.0,
        ));
        for cut in &self.state.cuts {
            if let crate::cutting::CutKind::Planar { anchor, g_val, d } = &cut.kind {
                let mut gradient = d.clone().resize_vertically(n + 1, cut.s);
                gradient[n] = cut.s;
                let value = crate::cutting::affine_value(anchor, *g_val, d, &x) + cut.s * sigma;
                out.push(SmoothEval { value, gradient, hessian: None });
            } else {
                out.push(lift(cut_eval(&problem.family, cut, &x)?, cut.s));
            }
        }
        for c in self.state.statics() {
            out.push(lift(static_eval(c.as_ref(), &x)?, 0.0));
        }
        for &(i, b, upper) in &self.faces {
            let mut g = DVector::zeros(n);
            g[i] = if upper { 1.0 } else { -1.0 };
            let value = if upper { x[i] - b } else { b - x[i] };
            out.push(lift(SmoothEval { value, gradient: g, hessian: None }, 0.0));
        }
        Ok(out)
    }
}

fn solve_master_barrier<F: SemiInfiniteFamily>(
    state: &MasterState<'_, F>,
    settings: &BarrierSettings,
) -> Result<MasterSolution> {
    let problem = state.problem;
    let n = problem.dim();
    let faces = box_faces(problem)?;
    let x = interior_start(problem)?;

    // sigma is free: pick it so every sigma-carrying constraint has slack.
    let mut sigma_cap = state.y0_prev - x[0];
    for cut in &state.cuts {
        let g = cut_value(&problem.family, cut, &x)?;
        if cut.s > 0.0 {
            sigma_cap = sigma_cap.min(-g / cut.s);
        } else if g >= 0.0 {
            return Err(Error::MasterInfeasible(format!(
                "uncentered cut {} is not strictly satisfied at the Slater point (g = {g})",
                cut.id
            )));
        }
    }
    let sigma0 = if sigma_cap > 0.0 {
        0.5 * sigma_cap
    } else {
        sigma_cap - sigma_cap.abs().max(1.0)
    };
    let mut start = DVector::zeros(n + 1);
    start.rows_mut(0, n).copy_from(&x);
    start[n] = sigma0;

    let master = BarrierMaster { state, n, faces };
    let res = barrier::solve(&master, start, settings)?;
    let x = res.v.rows(0, n).into_owned();
    let sigma = res.v[n];
    let ncuts = state.cuts.len();
    Ok(MasterSolution {
        x,
        sigma,
        mu0: res.duals[0],
        mu: res.duals[1..=ncuts].to_vec(),
        dual_available: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::ex1;
    use crate::cutting::make_surface_cut;

    #[test]
    fn cut_free_master_on_example_one() {
        let problem = ex1::problem();
        let state = MasterState::new(&problem, 5.0);
        let sol = solve_master(&state, &MasterOptions::default()).unwrap();
        // max sigma = 5 - min over the box of (x1-2)^2 + (x2-0.2)^2 = 5 - 1.
        assert!((sol.sigma - 4.0).abs() < 1e-8, "sigma = {}", sol.sigma);
        assert!((sol.x[0] - 1.0).abs() < 1e-7);
        assert!((sol.x[1] - 1.0).abs() < 1e-6);
        assert!((sol.x[2] - 0.2).abs() < 1e-6, "x2 = {}", sol.x[2]);
        assert!((sol.mu0 - 1.0).abs() < 1e-9);
        assert!(check_dual_identity(&sol, &state.cuts).unwrap() < 1e-9);
    }

    #[test]
    fn dual_identity_requires_duals() {
        let sol = MasterSolution {
            x: DVector::zeros(1),
            sigma: 0.0,
            mu0: 1.0,
            mu: vec![],
            dual_available: false,
        };
        assert_eq!(check_dual_identity::<f64>(&sol, &[]), Err(Error::NoDuals));
    }

    #[test]
    fn dual_identity_with_one_surface_cut() {
        let problem = ex1::problem();
        let mut state = MasterState::new(&problem, 5.0);
        state.cuts.push(make_surface_cut(0, ex1::T_HAT, 1.0, 4.0, 1));
        let sol = solve_master(&state, &MasterOptions::default()).unwrap();
        assert!(check_dual_identity(&sol, &state.cuts).unwrap() <= 1e-6);
        assert!(sol.mu0 >= 0.0 && sol.mu.iter().all(|m| *m >= 0.0));
    }

    #[test]
    fn planar_cut_against_grid() {
        // Oracle: for fixed (x1, x2) the best x0 is the epigraph value, so
        // sigma = min(5 - (x1-2)^2 - (x2-0.2)^2, -x1).
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for i in 0..=2000 {
            let x1 = -1.0 + i as f64 * 1e-3;
            for j in 0..=200 {
                let x2 = j as f64 * 1e-3;
                let sigma = (5.0 - (x1 - 2.0).powi(2) - (x2 - 0.2).powi(2)).min(-x1);
                if sigma > best.0 {
                    best = (sigma, x1, x2);
                }
            }
        }
        let problem = ex1::problem();
        let mut state = MasterState::new(&problem, 5.0);
        let d = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        let cut = crate::cutting::make_planar_cut(0, DVector::zeros(3), CutIndex::Family(0.0), 0.0, d, 1.0, 10.0)
            .unwrap();
        state.cuts.push(cut);
        let sol = solve_master(&state, &MasterOptions::default()).unwrap();
        // No grid point beats the master, and the grid gets within a cell.
        assert!(sol.sigma >= best.0 - 1e-9 && sol.sigma - best.0 < 2e-3, "{} vs {}", sol.sigma, best.0);
        assert!((sol.x[1] - best.1).abs() < 2e-3);
        // Both the bound row and the cut are active: x1 = (5 - sqrt 29) / 2.
        assert!((sol.x[1] - (5.0 - 29f64.sqrt()) / 2.0).abs() < 1e-7);
        assert!((sol.x[2] - 0.2).abs() < 1e-5);
        assert!(check_dual_identity(&sol, &state.cuts).unwrap() <= 1e-6);
    }
}
