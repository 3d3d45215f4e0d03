//! The robust-constraint form of `ex1`:
//! `E_P[c(xi) x1^2 - x2] <= 0` for every `P` on `[0, 1]` with
//! `E_P[xi^i] = 1 / (i + 1)`, `i = 0..=m`. As `m` grows the model moves from
//! the worst case (`m = 0`) toward the uniform distribution.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::ex1;
use super::quadrature::gauss_legendre;
use crate::cutting::{run, SolveResult};
use crate::dro::{build_sicp, DistributionCutIndex, DroFamily, DroForm, DroOracle, DroProblem, FiniteIndexOracle, ScenarioFunction};
use crate::error::{Error, Result};
use crate::lp::{solve_bounded_lp, BoundedLp, LpStatus};
use crate::moment::{DiscreteDistribution, MomentOracle, MomentSettings, MomentSpec, SampleBudget, SampleDomain};
use crate::problem::{CenteringStrategy, SicpProblem, SolverConfig};

pub const MAX_ORDER: usize = 6;

/// Samples per pricing certificate. `c` has an unbounded derivative at
/// `xi = 0`, so the volume bound gives no finite count here.
pub const SAMPLES: usize = 2000;

pub const QUADRATURE_NODES: usize = 256;

/// `G(v, xi) = c(xi) v1^2 - v2` on `v = (x0, x1, x2)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Ex3Scenario;

impl ScenarioFunction for Ex3Scenario {
    fn eval(&self, v: &DVector<f64>, xi: &DVector<f64>) -> (f64, DVector<f64>) {
        let c = ex1::coefficient(xi[0]);
        (c * v[1] * v[1] - v[2], DVector::from_vec(vec![0.0, 2.0 * c * v[1], -1.0]))
    }

    fn hessian(&self, _v: &DVector<f64>, xi: &DVector<f64>) -> Option<DMatrix<f64>> {
        let mut h = DMatrix::zeros(3, 3);
        h[(1, 1)] = 2.0 * ex1::coefficient(xi[0]);
        Some(h)
    }

    fn subgradient_bound(&self) -> f64 {
        ex1::subgradient_bound()
    }
}

pub fn domain() -> SampleDomain {
    SampleDomain::interval(0.0, 1.0).expect("unit interval")
}

pub fn dro_problem(m: usize) -> Result<DroProblem> {
    if m > MAX_ORDER {
        return Err(Error::InvalidProblem(format!("ex3 moment order {m} > {MAX_ORDER}")));
    }
    Ok(DroProblem {
        name: format!("ex3:m={m}"),
        bounds: ex1::decision_box(),
        statics: vec![ex1::objective_epigraph()],
        h: Arc::new(Ex3Scenario),
        spec: MomentSpec::uniform_moments(m),
        domain: domain(),
        form: DroForm::Constraint,
        // G(xbar, xi) = -0.1 whatever the distribution.
        slater: Some(ex1::slater()),
    })
}

pub fn problem(m: usize) -> Result<SicpProblem<DroFamily>> {
    build_sicp(&dro_problem(m)?)
}

pub fn moment_settings() -> MomentSettings {
    MomentSettings { budget: SampleBudget::Fixed(SAMPLES), ..MomentSettings::default() }
}

pub fn oracle(m: usize, seed: u64) -> Result<DroOracle> {
    let dro = dro_problem(m)?;
    Ok(DroOracle::new(MomentOracle::new(dro.spec, dro.domain, moment_settings(), seed)?))
}

pub fn config() -> SolverConfig {
    let mut c = ex1::config();
    c.centering = CenteringStrategy::Constant(1e-3);
    c.sigma_tol = 1e-8;
    c
}

/// The uniform distribution on `[0, 1]` through the Gauss-Legendre rule.
pub fn quadrature_distribution() -> DiscreteDistribution {
    let rule = gauss_legendre(QUADRATURE_NODES, 0.0, 1.0);
    let points = rule.nodes.iter().map(|&t| DVector::from_vec(vec![t])).collect();
    DiscreteDistribution::new(points, rule.weights.clone()).expect("matching lengths")
}

/// The stochastic program: a single fixed distribution.
pub fn sp_problem() -> Result<(SicpProblem<DroFamily>, FiniteIndexOracle)> {
    let mut dro = dro_problem(0)?;
    dro.name = "ex3:inf".into();
    let p = build_sicp(&dro)?;
    let oracle = FiniteIndexOracle { candidates: vec![DistributionCutIndex { distribution: quadrature_distribution() }] };
    Ok((p, oracle))
}

pub fn solve_sp_baseline() -> Result<SolveResult> {
    let (p, mut oracle) = sp_problem()?;
    run(&p, &mut oracle, &config())
}

/// `max_P E_P[c]` for the point-mass and the quadrature cases, which fix
/// the optimum in closed form: `x1 = sqrt(0.2 / c)`, `z = (x1 - 2)^2`.
pub fn optimum_for_coefficient(c: f64) -> (f64, f64) {
    let x1 = (0.2 / c).sqrt();
    (x1, (x1 - 2.0).powi(2))
}

fn coefficient_lp(m: usize, ts: &[f64]) -> Result<(f64, Vec<f64>)> {
    let spec = MomentSpec::uniform_moments(m);
    let a = DMatrix::from_fn(spec.len(), ts.len(), |r, j| ts[j].powi(r as i32));
    let c = DVector::from_iterator(ts.len(), ts.iter().map(|&t| ex1::coefficient(t)));
    let lp = BoundedLp::new(a, c, DVector::from_vec(spec.l.clone()), DVector::from_vec(spec.u.clone()))?;
    let sol = solve_bounded_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Numerical(format!("ex3 reference LP: {:?}", sol.status)));
    }
    let support = (0..ts.len()).filter(|&j| sol.w[j] > 1e-12).map(|j| ts[j]).collect();
    Ok((sol.value, support))
}

/// `max E_P[c]` over distributions on a `grid`-point mesh of `[0, 1]` with
/// the first `m` uniform moments, then refined on ever finer local meshes
/// around the support found.
pub fn grid_coefficient(m: usize, grid: usize) -> Result<f64> {
    let coarse: Vec<f64> = (0..grid).map(|i| i as f64 / (grid - 1) as f64).collect();
    let (mut value, mut support) = coefficient_lp(m, &coarse)?;
    let mut h = 1.0 / (grid - 1) as f64;
    for _ in 0..4 {
        let mut ts = support.clone();
        for &s in &support {
            ts.extend((-100..=100).map(|j| (s + j as f64 * h / 50.0).clamp(0.0, 1.0)));
        }
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        let next = coefficient_lp(m, &ts)?;
        value = value.max(next.0);
        support = next.1;
        h /= 50.0;
    }
    Ok(value)
}

/// Reference optimum `z(m)` from a fine-grid LP.
pub fn reference_objective(m: usize) -> Result<f64> {
    if m == 0 {
        return Ok(ex1::optimum().2);
    }
    Ok(optimum_for_coefficient(grid_coefficient(m, 501)?).1)
}

/// `z(inf)` through the quadrature mean of `c`.
pub fn sp_reference_objective() -> f64 {
    let c = quadrature_distribution().expectation(|xi| ex1::coefficient(xi[0]));
    optimum_for_coefficient(c).1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::SemiInfiniteFamily;

    #[test]
    fn quadrature_mean_coefficient() {
        let p = quadrature_distribution();
        let c = p.expectation(|xi| ex1::coefficient(xi[0]));
        let (x1, z) = optimum_for_coefficient(c);
        assert!((x1 - 0.27181).abs() < 1e-5 && (z - 2.9866).abs() < 1e-4);
    }

    #[test]
    fn point_mass_matches_ex1() {
        let p = problem(0).unwrap();
        let v = DVector::from_vec(vec![3.0, 0.7, 0.1]);
        let idx = DistributionCutIndex { distribution: DiscreteDistribution::point_mass(DVector::from_vec(vec![0.3])) };
        let (g, d) = p.family.evaluate(&v, &idx).unwrap();
        let (g1, d1) = ex1::Ex1Family.evaluate(&v, &0.3).unwrap();
        assert!((g - g1).abs() < 1e-15 && (d - d1).norm() < 1e-15);
    }

    #[test]
    fn grid_reference_spectrum() {
        let published = [3.0746, 3.0726, 3.0192, 2.9999, 2.9937, 2.9914];
        let mut prev = reference_objective(0).unwrap();
        for (m, z) in (1..=6).zip(published) {
            let r = reference_objective(m).unwrap();
            assert!((r - z).abs() < 2e-4, "m={m} {r}");
            assert!(r <= prev + 1e-12);
            prev = r;
        }
    }

    #[test]
    fn order_range() {
        assert!(problem(MAX_ORDER).is_ok());
        assert!(problem(MAX_ORDER + 1).is_err());
    }

    #[test]
    fn subgradient_in_x1() {
        let p = quadrature_distribution();
        let v = DVector::from_vec(vec![0.0, 0.4, 0.2]);
        let g = crate::dro::expectation_subgradient(&Ex3Scenario, &v, &p);
        let mean: f64 = p.points.iter().zip(&p.weights).map(|(x, w)| w * ex1::coefficient(x[0])).sum();
        assert!((g[1] - 2.0 * 0.4 * mean).abs() < 1e-13);
    }
}
