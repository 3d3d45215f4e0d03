//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use sicp_core::lp::BoundedLp;

/// Best objective over all vertices of `l <= A w <= u, w >= 0`, found by
/// trying every basis of `[A | -I]` and every bound choice for the nonbasic
/// slacks. `None` when no vertex is feasible.
pub fn enumerate_lp(lp: &BoundedLp) -> Option<f64> {
    let (n, k) = lp.a.shape();
    let total = k + n;
    let mut best: Option<f64> = None;
    let mut basis = Vec::with_capacity(n);
    subsets(total, n, 0, &mut basis, &mut |basis| {
        let nonbasic_slacks: Vec<usize> = (0..n).filter(|i| !basis.contains(&(k + i))).collect();
        let mut m = DMatrix::zeros(n, n);
        for (c, &j) in basis.iter().enumerate() {
            if j < k {
                m.set_column(c, &lp.a.column(j));
            } else {
                m[(j - k, c)] = -1.0;
            }
        }
        let Some(lu) = Some(m.lu()).filter(|lu| lu.determinant().abs() > 1e-12) else {
            return;
        };
        for mask in 0..(1usize << nonbasic_slacks.len()) {
            // A w_B - s_B = s_N with each nonbasic slack at a bound.
            let mut rhs = DVector::zeros(n);
            for (b, &i) in nonbasic_slacks.iter().enumerate() {
                rhs[i] = if mask >> b & 1 == 1 { lp.u[i] } else { lp.l[i] };
            }
            let Some(xb) = lu.solve(&rhs) else { continue };
            let mut ok = true;
            let mut value = 0.0;
            for (c, &j) in basis.iter().enumerate() {
                if j < k {
                    ok &= xb[c] >= -1e-10;
                    value += lp.c[j] * xb[c];
                } else {
                    let i = j - k;
                    ok &= xb[c] >= lp.l[i] - 1e-10 && xb[c] <= lp.u[i] + 1e-10;
                }
            }
            if ok && best.is_none_or(|b| value > b) {
                best = Some(value);
            }
        }
    });
    best
}

fn subsets(total: usize, size: usize, from: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if cur.len() == size {
        f(cur);
        return;
    }
    for j in from..total {
        if total - j < size - cur.len() {
            break;
        }
        cur.push(j);
        subsets(total, size, j + 1, cur, f);
        cur.pop();
    }
}

/// A random bounded LP. The first row has positive entries, which keeps the
/// feasible set bounded; some rows are equalities.
pub fn random_lp(rng: &mut impl Rng, n: usize, k: usize) -> BoundedLp {
    let mut a = DMatrix::zeros(n, k);
    for j in 0..k {
        a[(0, j)] = rng.random_range(0.5..1.5);
        for i in 1..n {
            a[(i, j)] = rng.random_range(-1.0..1.0);
        }
    }
    let c = DVector::from_fn(k, |_, _| rng.random_range(-1.0..1.0));
    let mut l = DVector::zeros(n);
    let mut u = DVector::zeros(n);
    l[0] = rng.random_range(0.0..0.5);
    u[0] = l[0] + rng.random_range(0.5..1.5);
    for i in 1..n {
        let mid: f64 = rng.random_range(-0.5..0.5);
        let half = if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..0.5) };
        l[i] = mid - half;
        u[i] = mid + half;
    }
    BoundedLp::new(a, c, l, u).expect("valid shapes")
}
