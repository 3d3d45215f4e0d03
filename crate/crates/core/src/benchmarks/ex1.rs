//! `min (x1-2)^2 + (x2-0.2)^2  s.t.  c(t) x1^2 - x2 <= 0, t in [0, 1]`,
//! with `c(t) = 5 sin(pi sqrt t) / (1 + t^2)`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::search::{maximize_scalar, IntervalOracle};
use crate::error::Result;
use crate::problem::{DecisionBox, Epigraph, SemiInfiniteFamily, SicpProblem, SlaterInfo, SolverConfig};

/// Maximizer of `c` on `[0, 1]`, to four digits.
pub const T_HAT: f64 = 0.2134;

pub const UPPER_BOUND: f64 = 5.0;

pub fn coefficient(t: f64) -> f64 {
    5.0 * (PI * t.sqrt()).sin() / (1.0 + t * t)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Ex1Family;

impl SemiInfiniteFamily for Ex1Family {
    type Index = f64;

    fn evaluate(&self, x: &DVector<f64>, t: &f64) -> Result<(f64, DVector<f64>)> {
        let c = coefficient(*t);
        let value = c * x[1] * x[1] - x[2];
        Ok((value, DVector::from_vec(vec![0.0, 2.0 * c * x[1], -1.0])))
    }

    fn hessian(&self, _x: &DVector<f64>, t: &f64) -> Result<Option<DMatrix<f64>>> {
        let mut h = DMatrix::zeros(3, 3);
        h[(1, 1)] = 2.0 * coefficient(*t);
        Ok(Some(h))
    }
}

/// `(x1-2)^2 + (x2-0.2)^2 - x0 <= 0` on `(x0, x1, x2)`.
pub fn objective_epigraph() -> Arc<dyn crate::problem::StaticConstraint> {
    Arc::new(Epigraph::new(
        |x: &DVector<f64>| {
            let (a, b) = (x[1] - 2.0, x[2] - 0.2);
            (a * a + b * b, DVector::from_vec(vec![0.0, 2.0 * a, 2.0 * b]))
        },
        |_| DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 2.0, 2.0])),
    ))
}

pub fn decision_box() -> DecisionBox {
    DecisionBox::new(vec![0.0, -1.0, 0.0], vec![UPPER_BOUND, 1.0, 0.2]).expect("static box")
}

pub fn slater() -> SlaterInfo {
    SlaterInfo { xbar: DVector::from_vec(vec![4.5, 0.0, 0.1]), eta: 0.1 }
}

/// `|d| <= sqrt(1 + (2 * 5 * 1)^2)` since `c <= 5` and `|x1| <= 1`.
pub fn subgradient_bound() -> f64 {
    101f64.sqrt()
}

pub fn problem() -> SicpProblem<Ex1Family> {
    SicpProblem {
        name: "ex1".into(),
        bounds: decision_box(),
        statics: vec![objective_epigraph()],
        family: Ex1Family,
        slater: slater(),
        subgradient_bound: subgradient_bound(),
        // (x1, x2) = (0, 0) is feasible with objective 4.04.
        known_feasible_objective: Some(4.04),
    }
}

pub fn oracle() -> IntervalOracle {
    IntervalOracle::new(0.0, 1.0)
}

pub fn config() -> SolverConfig {
    SolverConfig::new(UPPER_BOUND, subgradient_bound())
}

/// `(t_hat, c(t_hat))` to full precision.
pub fn coefficient_max() -> (f64, f64) {
    maximize_scalar(|t| Ok(coefficient(t)), 0.0, 1.0, 4096, 1e-13).expect("pure function")
}

/// Optimal `(x1, x2)` and objective: the constraint is active at `x2 = 0.2`.
pub fn optimum() -> (f64, f64, f64) {
    let (_, c) = coefficient_max();
    let x1 = (0.2 / c).sqrt();
    (x1, 0.2, (x1 - 2.0).powi(2))
}
