//! Smallest circle enclosing a parametric curve, in squared-radius form:
//! `min r2  s.t.  |x - p(t)|^2 - r2 <= 0`. Decision vector `(r2, x1, x2)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::search::{maximize_scalar, IntervalOracle};
use crate::error::Result;
use crate::problem::{DecisionBox, SemiInfiniteFamily, SicpProblem, SlaterInfo, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Curve {
    pub c: f64,
    /// Amplitude of the extra `sin(20 t)` in the second component.
    pub wobble: f64,
    pub t_max: f64,
}

impl Curve {
    pub fn first() -> Self {
        Self { c: 4.5, wobble: 0.0, t_max: 4.0 * PI }
    }

    pub fn second() -> Self {
        Self { c: 40.0, wobble: 1.0, t_max: 2.0 * PI }
    }

    pub fn point(&self, t: f64) -> (f64, f64) {
        let c = self.c;
        (
            c * t.cos() - (c * t).cos(),
            self.wobble * (20.0 * t).sin() + c * t.sin() - (c * t).sin(),
        )
    }

    /// Upper bound on `|p(t)|`.
    pub fn radius_bound(&self) -> f64 {
        self.c + 1.0 + self.wobble.abs()
    }

    pub fn upper_bound(&self) -> f64 {
        2.0 * (self.c + 1.0).powi(2)
    }

    pub fn center_half_width(&self) -> f64 {
        self.c + 2.0
    }
}

impl SemiInfiniteFamily for Curve {
    type Index = f64;

    fn evaluate(&self, x: &DVector<f64>, t: &f64) -> Result<(f64, DVector<f64>)> {
        let (p1, p2) = self.point(*t);
        let (a, b) = (x[1] - p1, x[2] - p2);
        Ok((a * a + b * b - x[0], DVector::from_vec(vec![-1.0, 2.0 * a, 2.0 * b])))
    }

    fn hessian(&self, _x: &DVector<f64>, _t: &f64) -> Result<Option<DMatrix<f64>>> {
        Ok(Some(DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 2.0, 2.0]))))
    }
}

pub fn problem(curve: Curve, name: &str) -> SicpProblem<Curve> {
    let u = curve.upper_bound();
    let w = curve.center_half_width();
    let xbar0 = 0.75 * u;
    let bound = (1.0 + 8.0 * (w + curve.radius_bound()).powi(2)).sqrt();
    SicpProblem {
        name: name.into(),
        bounds: DecisionBox::new(vec![0.0, -w, -w], vec![u, w, w]).expect("static box"),
        statics: vec![],
        family: curve,
        slater: SlaterInfo {
            xbar: DVector::from_vec(vec![xbar0, 0.0, 0.0]),
            eta: xbar0 - curve.radius_bound().powi(2),
        },
        subgradient_bound: bound,
        known_feasible_objective: Some(curve.radius_bound().powi(2)),
    }
}

pub fn oracle(curve: &Curve) -> IntervalOracle {
    IntervalOracle::new(0.0, curve.t_max)
}

pub fn config(problem: &SicpProblem<Curve>) -> SolverConfig {
    let mut c = SolverConfig::new(problem.family.upper_bound(), problem.subgradient_bound);
    c.sigma_tol = 1e-8;
    c
}

/// `max_t |center - p(t)|` over `samples` equispaced parameters, refined.
pub fn enclosing_radius(curve: &Curve, center: (f64, f64), samples: usize) -> f64 {
    let dist = |t: f64| {
        let (p1, p2) = curve.point(t);
        Ok(((center.0 - p1).powi(2) + (center.1 - p2).powi(2)).sqrt())
    };
    maximize_scalar(dist, 0.0, curve.t_max, samples, 1e-12).expect("pure function").1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_curve_is_inside_bound() {
        let curve = Curve::first();
        let r = enclosing_radius(&curve, (0.0, 0.0), 100_000);
        assert!((r - 5.5).abs() < 1e-9, "r = {r}");
        let p = problem(curve, "seb1");
        assert!(p.slater.eta > 0.0);
    }

    #[test]
    fn second_curve_bound() {
        let curve = Curve::second();
        let r = enclosing_radius(&curve, (0.0, 0.0), 100_000);
        assert!(r <= curve.radius_bound());
        assert!(curve.radius_bound().powi(2) < 0.75 * curve.upper_bound());
    }
}
