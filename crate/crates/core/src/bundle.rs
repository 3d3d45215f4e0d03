//! Level bundle method for the master problem when cuts are only
//! subdifferentiable.
//!
//! With every centering value positive the master is
//! `sigma* = -min_{x in X} F(x)`, `F(x) = max_i c_i(x) / s_i`, where `c_0 = x0 - y0`
//! (with `s_0 = 1`) and `c_j` are the cut functions. `F` is convex and only
//! its subgradients are used. Each iteration minimizes the cutting-plane model
//! of `F` for a lower bound and then projects the best point onto a level set
//! of the model; both subproblems are smooth and go through the barrier
//! engine, with the static constraints and the box kept exact.

use nalgebra::{DMatrix, DVector};

use crate::barrier::{self, BarrierProblem, BarrierSettings, SmoothEval};
use crate::error::{Error, Result};
use crate::master::{
    box_faces, cut_value, interior_start, static_eval, surface_index, MasterSolution, MasterState,
};
use crate::problem::{SemiInfiniteFamily, StaticConstraint};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BundleSettings {
    /// Stop when `F_up - F_low` is below this.
    pub tol: f64,
    /// Level parameter in `(0, 1)`.
    pub level: f64,
    pub max_iters: usize,
}

impl Default for BundleSettings {
    fn default() -> Self {
        Self { tol: 1e-9, level: 0.3, max_iters: 2000 }
    }
}

struct Plane {
    /// Model piece `value + slope . (x - at)`, stored as `offset + slope . x`.
    offset: f64,
    slope: DVector<f64>,
}

/// Smooth part of `X`: box faces plus static constraints.
struct Region<'a> {
    n: usize,
    faces: Vec<(usize, f64, bool)>,
    statics: Vec<&'a dyn StaticConstraint>,
}

impl Region<'_> {
    fn push_values(&self, x: &DVector<f64>, out: &mut Vec<f64>) {
        for c in &self.statics {
            out.push(c.eval(x).0);
        }
        for &(i, b, upper) in &self.faces {
            out.push(if upper { x[i] - b } else { b - x[i] });
        }
    }

    fn push_evals(&self, x: &DVector<f64>, extra: usize, out: &mut Vec<SmoothEval>) -> Result<()> {
        let n = self.n;
        for c in &self.statics {
            let e = static_eval(*c, x)?;
            let mut g = DVector::zeros(n + extra);
            g.rows_mut(0, n).copy_from(&e.gradient);
            let h = e.hessian.map(|h| {
                let mut big = DMatrix::zeros(n + extra, n + extra);
                big.view_mut((0, 0), (n, n)).copy_from(&h);
                big
            });
            out.push(SmoothEval { value: e.value, gradient: g, hessian: h });
        }
        for &(i, b, upper) in &self.faces {
            let mut g = DVector::zeros(n + extra);
            g[i] = if upper { 1.0 } else { -1.0 };
            out.push(SmoothEval {
                value: if upper { x[i] - b } else { b - x[i] },
                gradient: g,
                hessian: None,
            });
        }
        Ok(())
    }

    fn count(&self) -> usize {
        self.statics.len() + self.faces.len()
    }
}

/// `min r s.t. plane_k(x) <= r, x in region` over `(x, r)`.
struct ModelMin<'r, 'a> {
    region: &'r Region<'a>,
    planes: &'r [Plane],
}

impl BarrierProblem for ModelMin<'_, '_> {
    fn dim(&self) -> usize {
        self.region.n + 1
    }
    fn num_constraints(&self) -> usize {
        self.planes.len() + self.region.count()
    }
    fn objective(&self, v: &DVector<f64>) -> Result<SmoothEval> {
        let mut g = DVector::zeros(self.dim());
        g[self.region.n] = 1.0;
        Ok(SmoothEval { value: v[self.region.n], gradient: g, hessian: None })
    }
    fn objective_value(&self, v: &DVector<f64>) -> Result<f64> {
        Ok(v[self.region.n])
    }
    fn constraint_values(&self, v: &DVector<f64>, out: &mut Vec<f64>) -> Result<()> {
        out.clear();
        let n = self.region.n;
        let x = v.rows(0, n).into_owned();
        for p in self.planes {
            out.push(p.offset + p.slope.dot(&x) - v[n]);
        }
        self.region.push_values(&x, out);
        Ok(())
    }
    fn constraint_evals(&self, v: &DVector<f64>) -> Result<Vec<SmoothEval>> {
        let n = self.region.n;
        let x = v.rows(0, n).into_owned();
        let mut out = Vec::with_capacity(self.num_constraints());
        for p in self.planes {
            let mut g = DVector::zeros(n + 1);
            g.rows_mut(0, n).copy_from(&p.slope);
            g[n] = -1.0;
            out.push(SmoothEval { value: p.offset + p.slope.dot(&x) - v[n], gradient: g, hessian: None });
        }
        self.region.push_evals(&x, 1, &mut out)?;
        Ok(out)
    }
}

/// `min 1/2 |x - center|_D^2 s.t. plane_k(x) <= level, x in region`.
struct LevelProjection<'r, 'a> {
    region: &'r Region<'a>,
    planes: &'r [Plane],
    center: &'r DVector<f64>,
    metric: &'r DVector<f64>,
    level: f64,
}

impl BarrierProblem for LevelProjection<'_, '_> {
    fn dim(&self) -> usize {
        self.region.n
    }
    fn num_constraints(&self) -> usize {
        self.planes.len() + self.region.count()
    }
    fn objective(&self, x: &DVector<f64>) -> Result<SmoothEval> {
        let diff = (x - self.center).component_mul(self.metric);
        Ok(SmoothEval {
            value: 0.5 * (x - self.center).dot(&diff),
            gradient: diff,
            hessian: Some(DMatrix::from_diagonal(self.metric)),
        })
    }
    fn constraint_values(&self, x: &DVector<f64>, out: &mut Vec<f64>) -> Result<()> {
        out.clear();
        for p in self.planes {
            out.push(p.offset + p.slope.dot(x) - self.level);
        }
        self.region.push_values(x, out);
        Ok(())
    }
    fn constraint_evals(&self, x: &DVector<f64>) -> Result<Vec<SmoothEval>> {
        let mut out = Vec::with_capacity(self.num_constraints());
        for p in self.planes {
            out.push(SmoothEval {
                value: p.offset + p.slope.dot(x) - self.level,
                gradient: p.slope.clone(),
                hessian: None,
            });
        }
        self.region.push_evals(x, 0, &mut out)?;
        Ok(out)
    }
}

/// `F(x)` and a subgradient.
fn master_function<F: SemiInfiniteFamily>(
    state: &MasterState<'_, F>,
    x: &DVector<f64>,
) -> Result<(f64, DVector<f64>)> {
    let n = x.len();
    let mut best = x[0] - state.y0_prev;
    let mut grad = DVector::zeros(n);
    grad[0] = 1.0;
    for cut in &state.cuts {
        let v = cut_value(&state.problem.family, cut, x)? / cut.s;
        if v > best {
            best = v;
            grad = match &cut.kind {
                crate::cutting::CutKind::Planar { d, .. } => d / cut.s,
                crate::cutting::CutKind::Surface => {
                    state.problem.family.evaluate(x, surface_index(cut)?)?.1 / cut.s
                }
            };
        }
    }
    Ok((best, grad))
}

pub fn solve_master<F: SemiInfiniteFamily>(
    state: &MasterState<'_, F>,
    settings: &BundleSettings,
) -> Result<MasterSolution> {
    if let Some(cut) = state.cuts.iter().find(|c| !(c.s > 0.0)) {
        return Err(Error::InvalidConfig(format!(
            "bundle master needs positive centering (cut {} has s = {})",
            cut.id, cut.s
        )));
    }
    let problem = state.problem;
    let n = problem.dim();
    let region = Region {
        n,
        faces: box_faces(problem)?,
        statics: state.statics().iter().map(|c| c.as_ref()).collect(),
    };
    let metric = DVector::from_iterator(
        n,
        problem
            .bounds
            .lower()
            .iter()
            .zip(problem.bounds.upper())
            .map(|(l, u)| 1.0 / (u - l).powi(2)),
    );
    let sub = BarrierSettings { gap_tol: settings.tol * 1e-3, ..BarrierSettings::default() };

    let mut x = interior_start(problem)?;
    let mut planes = Vec::new();
    let (mut f_up, g) = master_function(state, &x)?;
    let mut x_best = x.clone();
    planes.push(Plane { offset: f_up - g.dot(&x), slope: g });

    for _ in 0..settings.max_iters {
        let max_plane = planes
            .iter()
            .map(|p| p.offset + p.slope.dot(&x_best))
            .fold(f64::NEG_INFINITY, f64::max);
        let mut start = DVector::zeros(n + 1);
        start.rows_mut(0, n).copy_from(&x_best);
        start[n] = max_plane + 1.0;
        let low = barrier::solve(&ModelMin { region: &region, planes: &planes }, start, &sub)?;
        let f_low = low.objective - low.gap.max((low.duals.len() as f64) * low.weight);
        let gap = f_up - f_low;
        if gap <= settings.tol {
            return Ok(MasterSolution {
                x: x_best,
                sigma: -f_up,
                mu0: f64::NAN,
                mu: Vec::new(),
                dual_available: false,
            });
        }
        let level = f_low + settings.level * gap;
        let x_low = low.v.rows(0, n).into_owned();
        let proj = LevelProjection {
            region: &region,
            planes: &planes,
            center: &x_best,
            metric: &metric,
            level,
        };
        let next = barrier::solve(&proj, x_low, &sub)
            .map_err(|e| Error::InnerIterationLimit(format!("level projection failed: {e}")))?;
        x = next.v;
        let (fx, gx) = master_function(state, &x)?;
        if fx < f_up {
            f_up = fx;
            x_best = x.clone();
        }
        planes.push(Plane { offset: fx - gx.dot(&x), slope: gx });
    }
    Err(Error::InnerIterationLimit(format!(
        "level bundle did not close its gap in {} iterations",
        settings.max_iters
    )))
}
