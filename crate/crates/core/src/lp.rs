//! Dense bounded-variable revised simplex for
//!
//! ```text
//! maximize c.w  s.t.  l <= A w <= u,  w >= 0
//! ```
//!
//! Rows get slacks `s` with `A w - s = 0`, `l <= s <= u`, and the resulting
//! equality form is solved by a two-phase primal simplex with explicit basis
//! inverse. Row multipliers are split by sign into `(p_plus, p_minus)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const FEAS_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-11;
const REFACTOR_EVERY: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundedLp {
    pub a: DMatrix<f64>,
    pub c: DVector<f64>,
    pub l: DVector<f64>,
    pub u: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub w: DVector<f64>,
    pub value: f64,
    /// Row multipliers `y = p_plus - p_minus`.
    pub duals: DVector<f64>,
    pub p_plus: DVector<f64>,
    pub p_minus: DVector<f64>,
    /// Columns of `A` that are basic at the optimum.
    pub basic_columns: Vec<usize>,
    pub pivots: usize,
}

impl BoundedLp {
    pub fn new(a: DMatrix<f64>, c: DVector<f64>, l: DVector<f64>, u: DVector<f64>) -> Result<Self> {
        let (n, k) = a.shape();
        if c.len() != k || l.len() != n || u.len() != n || k == 0 || n == 0 {
            return Err(Error::InvalidProblem(format!(
                "LP shapes: A {n}x{k}, c {}, l {}, u {}",
                c.len(),
                l.len(),
                u.len()
            )));
        }
        for i in 0..n {
            if !(l[i].is_finite() && u[i].is_finite()) || l[i] > u[i] {
                return Err(Error::InvalidProblem(format!("row {i} bounds [{}, {}]", l[i], u[i])));
            }
        }
        Ok(Self { a, c, l, u })
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn cols(&self) -> usize {
        self.a.ncols()
    }
}

/// Equality-form tableau data: columns `0..K` are `w`, `K..K+N` slacks,
/// `K+N..K+2N` artificials.
struct Simplex<'a> {
    lp: &'a BoundedLp,
    n: usize,
    k: usize,
    art_sign: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    binv: DMatrix<f64>,
    pivots: usize,
    since_refactor: usize,
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a BoundedLp) -> Self {
        let (n, k) = lp.a.shape();
        let total = k + 2 * n;
        let mut lower = vec![0.0; total];
        let mut upper = vec![f64::INFINITY; total];
        let mut x = vec![0.0; total];
        let mut art_sign = vec![1.0; n];
        for i in 0..n {
            let (l, u) = (lp.l[i], lp.u[i]);
            lower[k + i] = l;
            upper[k + i] = u;
            let s = if l.abs() <= u.abs() { l } else { u };
            x[k + i] = s;
            // Row: A w - s + sign * a = 0 with w = 0, so a = |s|.
            art_sign[i] = if s < 0.0 { -1.0 } else { 1.0 };
            x[k + n + i] = s.abs();
        }
        let basis: Vec<usize> = (0..n).map(|i| k + n + i).collect();
        let mut is_basic = vec![false; total];
        for &b in &basis {
            is_basic[b] = true;
        }
        let binv = DMatrix::from_diagonal(&DVector::from_vec(art_sign.clone()));
        Self { lp, n, k, art_sign, lower, upper, x, basis, is_basic, binv, pivots: 0, since_refactor: 0 }
    }

    fn total(&self) -> usize {
        self.k + 2 * self.n
    }

    fn column(&self, j: usize) -> DVector<f64> {
        if j < self.k {
            self.lp.a.column(j).into_owned()
        } else if j < self.k + self.n {
            let mut e = DVector::zeros(self.n);
            e[j - self.k] = -1.0;
            e
        } else {
            let mut e = DVector::zeros(self.n);
            let i = j - self.k - self.n;
            e[i] = self.art_sign[i];
            e
        }
    }

    /// `y^T M_j` without materializing unit columns.
    fn price(&self, y: &DVector<f64>, j: usize) -> f64 {
        if j < self.k {
            self.lp.a.column(j).dot(y)
        } else if j < self.k + self.n {
            -y[j - self.k]
        } else {
            let i = j - self.k - self.n;
            self.art_sign[i] * y[i]
        }
    }

    fn refactor(&mut self) -> Result<()> {
        let mut b = DMatrix::zeros(self.n, self.n);
        for (r, &j) in self.basis.iter().enumerate() {
            b.set_column(r, &self.column(j));
        }
        let lu = b.clone().lu();
        let inv = lu.try_inverse().ok_or(Error::IllConditionedBasis)?;
        if inv.iter().any(|v| !v.is_finite()) {
            return Err(Error::IllConditionedBasis);
        }
        self.binv = inv;
        self.since_refactor = 0;
        // Recompute basic values from the nonbasic ones: B x_B = -N x_N.
        let mut rhs = DVector::zeros(self.n);
        for j in 0..self.total() {
            if !self.is_basic[j] && self.x[j] != 0.0 {
                rhs.axpy(-self.x[j], &self.column(j), 1.0);
            }
        }
        // LU solve plus one refinement step; clustered moment columns make
        // `B` badly conditioned.
        let mut xb = lu.solve(&rhs).ok_or(Error::IllConditionedBasis)?;
        let r = &rhs - &b * &xb;
        if let Some(dx) = lu.solve(&r) {
            xb += dx;
        }
        for (r, &j) in self.basis.iter().enumerate() {
            self.x[j] = xb[r];
        }
        Ok(())
    }

    fn duals(&self, cost: &[f64]) -> DVector<f64> {
        let cb = DVector::from_iterator(self.n, self.basis.iter().map(|&j| cost[j]));
        self.binv.tr_mul(&cb)
    }

    fn pivot(&mut self, row: usize, enter: usize, alpha: &DVector<f64>) -> Result<()> {
        let leave = self.basis[row];
        self.is_basic[leave] = false;
        self.is_basic[enter] = true;
        self.basis[row] = enter;
        let ar = alpha[row];
        let pivot_row = self.binv.row(row) / ar;
        for i in 0..self.n {
            if i != row && alpha[i] != 0.0 {
                let f = alpha[i];
                for c in 0..self.n {
                    self.binv[(i, c)] -= f * pivot_row[c];
                }
            }
        }
        self.binv.set_row(row, &pivot_row);
        self.pivots += 1;
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_EVERY {
            self.refactor()?;
        }
        Ok(())
    }

    /// Runs primal simplex iterations for `cost`; returns `false` if unbounded.
    fn optimize(&mut self, cost: &[f64]) -> Result<bool> {
        let total = self.total();
        let bland_after = 3 * (self.n + self.k);
        let mut degenerate = 0usize;
        let max_pivots = 50 * (total + 10) * (self.n + 1);
        loop {
            if self.pivots > max_pivots {
                return Err(Error::IllConditionedBasis);
            }
            let y = self.duals(cost);
            let bland = degenerate >= bland_after;
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..total {
                if self.is_basic[j] || self.upper[j] - self.lower[j] <= 0.0 {
                    continue;
                }
                let d = cost[j] - self.price(&y, j);
                let at_upper = self.x[j] >= self.upper[j];
                let improving = if at_upper { d < -OPT_TOL } else { d > OPT_TOL };
                if !improving {
                    continue;
                }
                if bland {
                    enter = Some((j, d));
                    break;
                }
                if enter.map_or(true, |(_, best)| d.abs() > best.abs()) {
                    enter = Some((j, d));
                }
            }
            let Some((j, d)) = enter else {
                return Ok(true);
            };
            let dir = if d > 0.0 { 1.0 } else { -1.0 };
            let alpha = &self.binv * self.column(j);
            // Basic values move by -dir * theta * alpha.
            let mut theta = self.upper[j] - self.lower[j];
            let mut leave: Option<usize> = None;
            for r in 0..self.n {
                let a = dir * alpha[r];
                let b = self.basis[r];
                let limit = if a > PIVOT_TOL {
                    (self.x[b] - self.lower[b]) / a
                } else if a < -PIVOT_TOL {
                    (self.upper[b] - self.x[b]) / -a
                } else {
                    continue;
                };
                let limit = limit.max(0.0);
                let better = match leave {
                    None => limit < theta,
                    Some(lr) => {
                        limit < theta - FEAS_TOL * 1e-3
                            || (limit <= theta + FEAS_TOL * 1e-3
                                && if bland { b < self.basis[lr] } else { a.abs() > (dir * alpha[lr]).abs() })
                    }
                };
                if better {
                    theta = limit;
                    leave = Some(r);
                }
            }
            if !theta.is_finite() {
                return Ok(false);
            }
            degenerate = if theta <= FEAS_TOL { degenerate + 1 } else { 0 };
            for r in 0..self.n {
                let b = self.basis[r];
                self.x[b] -= dir * theta * alpha[r];
            }
            self.x[j] += dir * theta;
            match leave {
                None => {
                    // Bound flip.
                    self.x[j] = if dir > 0.0 { self.upper[j] } else { self.lower[j] };
                }
                Some(r) => {
                    let b = self.basis[r];
                    let a = dir * alpha[r];
                    self.x[b] = if a > 0.0 { self.lower[b] } else { self.upper[b] };
                    self.pivot(r, j, &alpha)?;
                }
            }
        }
    }

    /// Pivots basic artificials at zero out of the basis where possible.
    fn expel_artificials(&mut self) -> Result<()> {
        for r in 0..self.n {
            let b = self.basis[r];
            if b < self.k + self.n {
                continue;
            }
            let row = self.binv.row(r).into_owned();
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.k + self.n {
                if self.is_basic[j] {
                    continue;
                }
                let v = if j < self.k {
                    row.dot(&self.lp.a.column(j).transpose())
                } else {
                    -row[j - self.k]
                };
                if v.abs() > 1e-7 && best.map_or(true, |(_, bv)| v.abs() > bv.abs()) {
                    best = Some((j, v));
                }
            }
            if let Some((j, _)) = best {
                let alpha = &self.binv * self.column(j);
                self.pivot(r, j, &alpha)?;
            }
        }
        self.refactor()
    }
}

pub fn solve_bounded_lp(lp: &BoundedLp) -> Result<LpSolution> {
    let (n, k) = lp.a.shape();
    let mut sx = Simplex::new(lp);
    let total = sx.total();

    let mut phase1 = vec![0.0; total];
    for c in phase1.iter_mut().skip(k + n) {
        *c = -1.0;
    }
    sx.optimize(&phase1)?;
    sx.refactor()?;
    let infeas: f64 = sx.x[k + n..].iter().sum();
    let scale = 1.0 + lp.l.amax().max(lp.u.amax());
    let empty = |status| LpSolution {
        status,
        w: DVector::zeros(k),
        value: f64::NAN,
        duals: DVector::zeros(n),
        p_plus: DVector::zeros(n),
        p_minus: DVector::zeros(n),
        basic_columns: Vec::new(),
        pivots: 0,
    };
    if infeas > FEAS_TOL * scale {
        return Ok(LpSolution { pivots: sx.pivots, ..empty(LpStatus::Infeasible) });
    }
    for j in k + n..total {
        sx.upper[j] = 0.0;
        sx.x[j] = 0.0;
    }
    sx.expel_artificials()?;

    let mut cost = vec![0.0; total];
    cost[..k].copy_from_slice(lp.c.as_slice());
    if !sx.optimize(&cost)? {
        return Ok(LpSolution { pivots: sx.pivots, ..empty(LpStatus::Unbounded) });
    }
    sx.refactor()?;

    let w = DVector::from_iterator(k, sx.x[..k].iter().map(|v| v.max(0.0)));
    let y = sx.duals(&cost);
    let p_plus = y.map(|v| v.max(0.0));
    let p_minus = y.map(|v| (-v).max(0.0));
    let mut basic_columns: Vec<usize> = sx.basis.iter().copied().filter(|&j| j < k).collect();
    basic_columns.sort_unstable();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        value: lp.c.dot(&w),
        w,
        duals: y,
        p_plus,
        p_minus,
        basic_columns,
        pivots: sx.pivots,
    })
}

impl LpSolution {
    /// `p_plus . u - p_minus . l`.
    pub fn dual_value(&self, lp: &BoundedLp) -> f64 {
        self.p_plus.dot(&lp.u) - self.p_minus.dot(&lp.l)
    }

    /// `c_j - y . A_j`.
    pub fn reduced_cost(&self, lp: &BoundedLp, j: usize) -> f64 {
        lp.c[j] - lp.a.column(j).dot(&self.duals)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(rows: &[&[f64]], c: &[f64], l: &[f64], u: &[f64]) -> BoundedLp {
        let a = DMatrix::from_row_slice(rows.len(), c.len(), &rows.concat());
        BoundedLp::new(a, DVector::from_row_slice(c), DVector::from_row_slice(l), DVector::from_row_slice(u)).unwrap()
    }

    #[test]
    fn two_points_unit_mass() {
        let p = lp(&[&[1.0, 1.0]], &[2.0, 1.0], &[1.0], &[1.0]);
        let s = solve_bounded_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.w[0] - 1.0).abs() < 1e-12 && s.w[1].abs() < 1e-12);
        assert!((s.value - 2.0).abs() < 1e-12);
        assert!((s.duals[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pinned_second_row() {
        let p = lp(&[&[1.0, 1.0], &[0.0, 1.0]], &[0.0, 1.0], &[1.0, 0.5], &[1.0, 0.5]);
        let s = solve_bounded_lp(&p).unwrap();
        assert!((s.w[0] - 0.5).abs() < 1e-12 && (s.w[1] - 0.5).abs() < 1e-12);
        assert!((s.value - 0.5).abs() < 1e-12);
        assert!((s.dual_value(&p) - s.value).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let p = lp(&[&[1.0, 1.0], &[1.0, 1.0]], &[1.0, 0.0], &[1.0, 2.0], &[1.0, 2.0]);
        assert_eq!(solve_bounded_lp(&p).unwrap().status, LpStatus::Infeasible);
        let p = lp(&[&[1.0, -1.0]], &[1.0, 0.0], &[0.0], &[1.0]);
        assert_eq!(solve_bounded_lp(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn interval_rows_and_duals() {
        // max w0 + w1 s.t. 0 <= w0 + 2 w1 <= 4, 1 <= w0 <= 3.
        let p = lp(&[&[1.0, 2.0], &[1.0, 0.0]], &[1.0, 1.0], &[0.0, 1.0], &[4.0, 3.0]);
        let s = solve_bounded_lp(&p).unwrap();
        assert!((s.value - 3.5).abs() < 1e-12, "{}", s.value);
        assert!((s.dual_value(&p) - 3.5).abs() < 1e-12);
        for j in 0..2 {
            assert!(s.reduced_cost(&p, j) <= 1e-9);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        let a = DMatrix::zeros(1, 2);
        assert!(BoundedLp::new(a.clone(), DVector::zeros(3), DVector::zeros(1), DVector::zeros(1)).is_err());
        assert!(BoundedLp::new(a, DVector::zeros(2), DVector::from_element(1, 1.0), DVector::zeros(1)).is_err());
    }
}
