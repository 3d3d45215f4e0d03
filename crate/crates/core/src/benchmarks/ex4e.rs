//! `min_{x in [-1,1]^n} max_{t in [0,1]} sum_i (i x_i - i/n - sin(2 pi t + i))^2`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::search::{maximize_scalar, IntervalOracle};
use crate::error::Result;
use crate::problem::{DecisionBox, SemiInfiniteFamily, SicpProblem, SlaterInfo, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ex4eFamily {
    pub n: usize,
}

impl Ex4eFamily {
    fn residual(&self, x: &DVector<f64>, i: usize, t: f64) -> f64 {
        let fi = i as f64;
        fi * x[i] - fi / self.n as f64 - (2.0 * PI * t + fi).sin()
    }
}

impl SemiInfiniteFamily for Ex4eFamily {
    type Index = f64;

    fn evaluate(&self, x: &DVector<f64>, t: &f64) -> Result<(f64, DVector<f64>)> {
        let mut grad = DVector::zeros(self.n + 1);
        grad[0] = -1.0;
        let mut value = -x[0];
        for i in 1..=self.n {
            let r = self.residual(x, i, *t);
            value += r * r;
            grad[i] = 2.0 * i as f64 * r;
        }
        Ok((value, grad))
    }

    fn hessian(&self, _x: &DVector<f64>, _t: &f64) -> Result<Option<DMatrix<f64>>> {
        let d = DVector::from_fn(self.n + 1, |i, _| 2.0 * (i * i) as f64);
        Ok(Some(DMatrix::from_diagonal(&d)))
    }
}

pub fn problem(n: usize) -> SicpProblem<Ex4eFamily> {
    let nf = n as f64;
    let mut lower = vec![-1.0; n + 1];
    let mut upper = vec![1.0; n + 1];
    lower[0] = 0.0;
    upper[0] = 4.0 * nf;
    let mut xbar = DVector::from_element(n + 1, 1.0 / nf);
    xbar[0] = 2.5 * nf;
    // |i x_i - i/n - sin| <= 2i + 1 on the box.
    let bound = (1.0 + (1..=n).map(|i| (2.0 * i as f64 * (2.0 * i as f64 + 1.0)).powi(2)).sum::<f64>()).sqrt();
    SicpProblem {
        name: format!("ex4e:n={n}"),
        bounds: DecisionBox::new(lower, upper).expect("static box"),
        statics: vec![],
        family: Ex4eFamily { n },
        slater: SlaterInfo { xbar, eta: 1.5 * nf },
        subgradient_bound: bound,
        // x_i = 1/n leaves sum sin^2 <= n.
        known_feasible_objective: Some(nf),
    }
}

pub fn oracle() -> IntervalOracle {
    IntervalOracle::new(0.0, 1.0)
}

pub fn config(problem: &SicpProblem<Ex4eFamily>) -> SolverConfig {
    let mut c = SolverConfig::new(4.0 * problem.family.n as f64, problem.subgradient_bound);
    c.sigma_tol = 1e-6;
    c
}

/// Optimal objective `max_t sum_i sin^2(2 pi t + i)`.
pub fn optimal_value(n: usize) -> f64 {
    let f = |t: f64| Ok((1..=n).map(|i| (2.0 * PI * t + i as f64).sin().powi(2)).sum());
    maximize_scalar(f, 0.0, 1.0, 4096, 1e-13).expect("pure function").1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optimum_consistency() {
        for n in [2, 5, 20] {
            let p = problem(n);
            let z = optimal_value(n);
            let mut x = DVector::from_element(n + 1, 1.0 / n as f64);
            x[0] = z;
            let (_, v) = oracle().argmax(&p.family, &x).unwrap();
            assert!(v.abs() < 1e-6, "n={n} v={v}");
            assert!(z <= n as f64);
        }
    }

    #[test]
    fn slater_margin() {
        let p = problem(5);
        for k in 0..=100 {
            let t = k as f64 / 100.0;
            assert!(p.family.evaluate(&p.slater.xbar, &t).unwrap().0 <= -p.slater.eta);
        }
    }
}
