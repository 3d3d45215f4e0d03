//! Grid search plus golden-section refinement over an index interval.

use nalgebra::DVector;

use crate::cutting::SeparationOracle;
use crate::error::Result;
use crate::problem::SemiInfiniteFamily;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden section for a maximum inside `[lo, hi]`.
fn golden(f: &mut impl FnMut(f64) -> Result<f64>, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)> {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// Maximizes a scalar function on `[a, b]`: `grid` equispaced samples, then
/// golden section on the two cells around every local maximum of the samples.
pub fn maximize_scalar(
    mut f: impl FnMut(f64) -> Result<f64>,
    a: f64,
    b: f64,
    grid: usize,
    refine_tol: f64,
) -> Result<(f64, f64)> {
    let grid = grid.max(2);
    let h = (b - a) / (grid - 1) as f64;
    let ts: Vec<f64> = (0..grid).map(|i| if i == grid - 1 { b } else { a + h * i as f64 }).collect();
    let vals = ts.iter().map(|&t| f(t)).collect::<Result<Vec<f64>>>()?;
    let mut best = (ts[0], vals[0]);
    for i in 0..grid {
        if vals[i] > best.1 {
            best = (ts[i], vals[i]);
        }
    }
    for i in 0..grid {
        let left = i == 0 || vals[i - 1] <= vals[i];
        let right = i == grid - 1 || vals[i + 1] < vals[i];
        if !(left && right) {
            continue;
        }
        let lo = ts[i.saturating_sub(1)];
        let hi = ts[(i + 1).min(grid - 1)];
        let cand = golden(&mut f, lo, hi, refine_tol)?;
        if cand.1 > best.1 {
            best = cand;
        }
    }
    Ok(best)
}

/// The refined maximizer of `g(x, .)` on `[a, b]`, if `g` is positive there.
pub fn separate_1d<F: SemiInfiniteFamily<Index = f64>>(
    family: &F,
    x: &DVector<f64>,
    interval: (f64, f64),
    grid: usize,
    refine_tol: f64,
) -> Result<Option<f64>> {
    let (t, v) = maximize_scalar(|t| Ok(family.evaluate(x, &t)?.0), interval.0, interval.1, grid, refine_tol)?;
    Ok((v > 0.0).then_some(t))
}

/// Separation oracle for families indexed by an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalOracle {
    pub a: f64,
    pub b: f64,
    pub grid: usize,
    pub refine_tol: f64,
}

impl IntervalOracle {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b, grid: 512, refine_tol: 1e-10 }
    }

    pub fn argmax<F: SemiInfiniteFamily<Index = f64>>(&self, family: &F, x: &DVector<f64>) -> Result<(f64, f64)> {
        maximize_scalar(|t| Ok(family.evaluate(x, &t)?.0), self.a, self.b, self.grid, self.refine_tol)
    }
}

impl<F: SemiInfiniteFamily<Index = f64>> SeparationOracle<F> for IntervalOracle {
    fn separate(&mut self, family: &F, x: &DVector<f64>, eps: f64) -> Result<Option<f64>> {
        let (t, v) = self.argmax(family, x)?;
        Ok((v > eps).then_some(t))
    }

    fn max_violation(&mut self, family: &F, x: &DVector<f64>) -> Result<f64> {
        Ok(self.argmax(family, x)?.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sine_maximizer() {
        let (t, v) = maximize_scalar(|t| Ok(t.sin()), 0.0, PI, 64, 1e-10).unwrap();
        assert!((t - PI / 2.0).abs() < 1e-5);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn endpoint_maximizer() {
        let (t, _) = maximize_scalar(|t| Ok(t), 0.0, 2.0, 10, 1e-10).unwrap();
        assert!((t - 2.0).abs() < 1e-9);
    }
}
