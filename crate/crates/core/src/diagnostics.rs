//! Runtime invariants of a cutting-loop history.
//!
//! Checked after the fact from the recorded [`IterationRecord`]s: monotone
//! `sigma` and `y0`, the dual identity on barrier iterations, the linear rate
//! inequality at optimality iterations, the lower bound on `mu0` beyond
//! `sigma < eta / B`, and that every dropped cut was strictly slack.

use crate::cutting::{CutType, IterationRecord};

/// Slack on the monotonicity checks.
pub const MONOTONE_SLACK: f64 = 1e-9;
/// Bound on `|mu0 + sum s_j mu_j - 1|`.
pub const DUAL_RESIDUAL_TOL: f64 = 1e-6;
/// Slack on the rate and `mu0` bound inequalities.
pub const RATE_SLACK: f64 = 1e-6;

/// Problem data the rate checks need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateInputs {
    /// Known optimal objective `z*`.
    pub z_star: f64,
    /// Initial upper bound `U`, i.e. `y0` before the first iteration.
    pub upper_bound: f64,
    /// Slater margin and objective coordinate of the Slater point.
    pub eta: f64,
    pub xbar0: f64,
    pub subgradient_bound: f64,
    /// Rate ratios are skipped once `y0^(k-1) - z*` is below this; the ratio
    /// is then dominated by the error in `z*` itself.
    pub gap_floor: f64,
}

impl RateInputs {
    /// `gap_floor` defaults to `1e-9 (1 + |z*|)`.
    pub fn new(z_star: f64, upper_bound: f64, eta: f64, xbar0: f64, subgradient_bound: f64) -> Self {
        Self { z_star, upper_bound, eta, xbar0, subgradient_bound, gap_floor: 1e-9 * (1.0 + z_star.abs()) }
    }

    /// `(eta - B sigma) / (eta + B (xbar0 - z*))`.
    pub fn mu0_lower_bound(&self, sigma: f64) -> f64 {
        let b = self.subgradient_bound;
        (self.eta - b * sigma) / (self.eta + b * (self.xbar0 - self.z_star))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InvariantReport {
    pub iterations: usize,
    pub max_sigma_increase: f64,
    pub max_y0_increase: f64,
    /// Largest dual-identity residual over iterations that reported one.
    pub max_dual_residual: Option<f64>,
    /// Optimality iterations where the rate ratio was evaluated / skipped.
    pub rate_checked: usize,
    pub rate_skipped: usize,
    /// Worst `ratio - (1 - mu0)`.
    pub worst_rate_excess: Option<f64>,
    pub bound_checked: usize,
    /// Worst `lower_bound - mu0`.
    pub worst_bound_excess: Option<f64>,
    pub dropped_cuts: usize,
    /// Largest slack of a dropped cut (must be negative).
    pub max_dropped_slack: Option<f64>,
    pub violations: Vec<String>,
}

impl InvariantReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

fn bump(slot: &mut Option<f64>, v: f64) {
    *slot = Some(slot.map_or(v, |s| s.max(v)));
}

/// Checks every invariant that `history` and `rate` allow. Rate and bound
/// checks run only on iterations with multipliers and only when `rate` is
/// given.
pub fn check_history(history: &[IterationRecord], rate: Option<&RateInputs>) -> InvariantReport {
    let mut rep = InvariantReport { iterations: history.len(), ..Default::default() };

    for pair in history.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let ds = b.sigma - a.sigma;
        let dy = b.y0 - a.y0;
        rep.max_sigma_increase = rep.max_sigma_increase.max(ds);
        rep.max_y0_increase = rep.max_y0_increase.max(dy);
        if ds > MONOTONE_SLACK {
            rep.violations.push(format!("sigma increased by {ds:e} at k={}", b.k));
        }
        if dy > MONOTONE_SLACK {
            rep.violations.push(format!("y0 increased by {dy:e} at k={}", b.k));
        }
    }

    let mut y0_prev = rate.map(|r| r.upper_bound);
    for rec in history {
        if let Some(res) = rec.dual_residual {
            bump(&mut rep.max_dual_residual, res);
            if res > DUAL_RESIDUAL_TOL {
                rep.violations.push(format!("dual identity residual {res:e} at k={}", rec.k));
            }
        }
        for &(id, slack) in &rec.dropped {
            rep.dropped_cuts += 1;
            bump(&mut rep.max_dropped_slack, slack);
            if !(slack < 0.0) {
                rep.violations.push(format!("cut {id} dropped at k={} with slack {slack:e}", rec.k));
            }
        }

        if let (Some(r), Some(mu0)) = (rate, rec.mu0) {
            if rec.cut_type == CutType::Optimality {
                let before = y0_prev.unwrap_or(r.upper_bound) - r.z_star;
                if before > r.gap_floor {
                    let ratio = (rec.y0 - r.z_star) / before;
                    let excess = ratio - (1.0 - mu0);
                    rep.rate_checked += 1;
                    bump(&mut rep.worst_rate_excess, excess);
                    if excess > RATE_SLACK {
                        rep.violations.push(format!(
                            "rate ratio {ratio:.9} > 1 - mu0 = {:.9} at k={}",
                            1.0 - mu0,
                            rec.k
                        ));
                    }
                } else {
                    rep.rate_skipped += 1;
                }
            }
            if rec.sigma < r.eta / r.subgradient_bound {
                let lb = r.mu0_lower_bound(rec.sigma);
                rep.bound_checked += 1;
                bump(&mut rep.worst_bound_excess, lb - mu0);
                if lb - mu0 > RATE_SLACK {
                    rep.violations.push(format!("mu0 = {mu0:e} below bound {lb:e} at k={}", rec.k));
                }
            }
        }
        y0_prev = Some(rec.y0);
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn rec(k: usize, sigma: f64, y0: f64, cut_type: CutType, mu0: f64) -> IterationRecord {
        IterationRecord {
            k,
            sigma,
            y0,
            cut_type,
            mu0: Some(mu0),
            m_sum: None,
            dual_residual: Some(0.0),
            dropped: vec![],
            x: DVector::zeros(1),
            active_cuts: 0,
        }
    }

    #[test]
    fn linear_rate_accepted() {
        // y0 halves towards 0 with mu0 = 0.5.
        let h = vec![
            rec(1, 0.5, 0.5, CutType::Optimality, 0.5),
            rec(2, 0.25, 0.25, CutType::Optimality, 0.5),
            rec(3, 0.2, 0.25, CutType::Feasibility, 0.5),
        ];
        let r = RateInputs::new(0.0, 1.0, 1.0, 3.0, 1.0);
        let rep = check_history(&h, Some(&r));
        assert!(rep.ok(), "{:?}", rep.violations);
        assert_eq!(rep.rate_checked, 2);
    }

    #[test]
    fn violations_reported() {
        let mut h = vec![
            rec(1, 0.5, 0.9, CutType::Optimality, 0.5),
            rec(2, 0.6, 0.95, CutType::Feasibility, 0.5),
        ];
        h[1].dropped.push((0, 0.0));
        h[1].dual_residual = Some(1e-3);
        let r = RateInputs::new(0.0, 1.0, 1.0, 3.0, 1.0);
        let rep = check_history(&h, Some(&r));
        // rate, sigma, y0, drop, dual.
        assert_eq!(rep.violations.len(), 5, "{:?}", rep.violations);
    }

    #[test]
    fn mu0_bound_formula() {
        let r = RateInputs::new(1.0, 5.0, 2.0, 3.0, 4.0);
        assert!((r.mu0_lower_bound(0.25) - 1.0 / 10.0).abs() < 1e-15);
    }
}
