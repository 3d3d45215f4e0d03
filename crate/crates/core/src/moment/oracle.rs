//! Randomized column generation for `max E_P[h]` over a moment set.
//!
//! The LP over the current candidate support gives prices `y`; uniformly
//! sampled points with positive reduced cost `h(xi) - y . f(xi)` enter as new
//! columns. `M` consecutive samples without one certify the incumbent.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::domain::{DomainSampler, SampleDomain};
use super::spec::MomentSpec;
use crate::error::{Error, Result};
use crate::lp::{solve_bounded_lp, BoundedLp, LpSolution, LpStatus};

/// Weights below this are treated as zero when reading off a distribution.
const WEIGHT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    pub points: Vec<DVector<f64>>,
    pub weights: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(points: Vec<DVector<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::InvalidProblem(format!(
                "distribution with {} points and {} weights",
                points.len(),
                weights.len()
            )));
        }
        Ok(Self { points, weights })
    }

    pub fn point_mass(xi: DVector<f64>) -> Self {
        Self { points: vec![xi], weights: vec![1.0] }
    }

    pub fn expectation(&self, f: impl Fn(&DVector<f64>) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }

    pub fn moments(&self, spec: &MomentSpec) -> DVector<f64> {
        let mut m = DVector::zeros(spec.len());
        for (p, w) in self.points.iter().zip(&self.weights) {
            m.axpy(*w, &spec.evaluate(p), 1.0);
        }
        m
    }

    /// Largest violation of a moment interval or of weight nonnegativity.
    pub fn moment_violation(&self, spec: &MomentSpec) -> f64 {
        let m = self.moments(spec);
        let rows = (0..spec.len()).map(|i| (spec.l[i] - m[i]).max(m[i] - spec.u[i]));
        let neg = self.weights.iter().map(|w| -w);
        rows.chain(neg).fold(0.0, f64::max)
    }

    pub fn support_size(&self) -> usize {
        self.weights.iter().filter(|w| **w > WEIGHT_TOL).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleBudget {
    Fixed(usize),
    /// `M` from the volume bound for failure probability `delta`, capped.
    Confidence { delta: f64, max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSettings {
    pub eps: f64,
    pub budget: SampleBudget,
    pub max_lp_solves: usize,
    /// Phase-one starting columns; `max(2N, 50)` when unset.
    pub initial_samples: Option<usize>,
    /// Samples tried per phase-one pricing round before giving up.
    pub phase_one_samples: usize,
    pub max_pool: usize,
    /// Relative threshold a reduced cost must exceed to count as positive.
    pub rc_tol: f64,
}

impl Default for MomentSettings {
    fn default() -> Self {
        Self {
            eps: 1e-4,
            budget: SampleBudget::Fixed(1000),
            max_lp_solves: 10_000,
            initial_samples: None,
            phase_one_samples: 10_000,
            max_pool: 2000,
            rc_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Certificate {
    /// That many consecutive samples had no positive reduced cost.
    EpsOptimal { samples: usize },
    EarlyViolation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    pub distribution: DiscreteDistribution,
    pub value: f64,
    pub certificate: Certificate,
    pub lp_solves: usize,
    /// LP optimum after each solve.
    pub lp_values: Vec<f64>,
    /// Gradient bound `C` on the reduced cost used for the sample budget.
    pub gradient_bound: Option<f64>,
    /// `C` came from finite differences instead of supplied bounds.
    pub heuristic_bound: bool,
    /// `(1 - p)^M` for the budget actually used, when `p` is available.
    pub implied_delta: Option<f64>,
}

/// Lower bound on the probability that a uniform sample lands where the
/// reduced cost exceeds `max - eps`, for a `c`-Lipschitz reduced cost:
/// `(2 pi (d + 2))^{-1/2} (r eps / (2 R c))^d`. Finite domains sampled without
/// replacement use `1 / K`.
pub fn p_bound(eps: f64, c: f64, domain: &SampleDomain) -> f64 {
    if let Some(points) = domain.finite_points() {
        return 1.0 / points.len() as f64;
    }
    let d = domain.dim() as f64;
    let ratio = domain.inner_radius * eps / (2.0 * domain.outer_radius * c);
    (2.0 * PI * (d + 2.0)).powf(-0.5) * ratio.powf(d)
}

/// `ceil(ln delta / ln(1 - p))`, at least one.
pub fn required_samples(eps: f64, c: f64, domain: &SampleDomain, delta: f64) -> Result<usize> {
    if !(eps > 0.0) || !(c > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidConfig(format!("required_samples(eps={eps}, C={c}, delta={delta})")));
    }
    let p = p_bound(eps, c, domain);
    if p >= 1.0 {
        return Ok(1);
    }
    let p = p.min(1.0 - 1e-12);
    let m = (delta.ln() / (-p).ln_1p()).ceil();
    Ok(if m.is_finite() { (m as usize).max(1) } else { usize::MAX })
}

fn lp_over(cols: &[DVector<f64>], spec: &MomentSpec, c: DVector<f64>, elastic: bool) -> Result<BoundedLp> {
    let n = spec.len();
    let extra = if elastic { 2 * n } else { 0 };
    let mut a = DMatrix::zeros(n, cols.len() + extra);
    for (j, f) in cols.iter().enumerate() {
        a.set_column(j, f);
    }
    for i in 0..extra / 2 {
        a[(i, cols.len() + 2 * i)] = 1.0;
        a[(i, cols.len() + 2 * i + 1)] = -1.0;
    }
    BoundedLp::new(a, c, DVector::from_column_slice(&spec.l), DVector::from_column_slice(&spec.u))
}

/// Solves the LP over `support` with objective `h_values`.
pub fn pricing_duals(support: &[DVector<f64>], spec: &MomentSpec, h_values: &[f64]) -> Result<LpSolution> {
    if support.is_empty() || support.len() != h_values.len() {
        return Err(Error::InvalidProblem("pricing needs one objective value per support point".into()));
    }
    let cols: Vec<DVector<f64>> = support.iter().map(|p| spec.evaluate(p)).collect();
    solve_pricing(&cols, spec, h_values)
}

fn solve_pricing(cols: &[DVector<f64>], spec: &MomentSpec, h_values: &[f64]) -> Result<LpSolution> {
    let lp = lp_over(cols, spec, DVector::from_column_slice(h_values), false)?;
    let sol = solve_bounded_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol),
        LpStatus::Infeasible => Err(Error::PricingInfeasible),
        // The unit-mass row bounds every weight.
        LpStatus::Unbounded => Err(Error::Numerical("pricing LP reported unbounded".into())),
    }
}

/// `h(xi) - y . f(xi)`.
pub fn reduced_cost(
    xi: &DVector<f64>,
    duals: &DVector<f64>,
    h: &dyn Fn(&DVector<f64>) -> f64,
    spec: &MomentSpec,
    domain: &SampleDomain,
) -> Result<f64> {
    if !domain.contains(xi) {
        return Err(Error::OutsideDomain);
    }
    Ok(h(xi) - duals.dot(&spec.evaluate(xi)))
}

/// Finds a finitely supported member of the moment set by column generation
/// on the elastic LP `max -sum(e+ + e-)  s.t.  l <= A w + e+ - e- <= u`.
pub fn phase_one(spec: &MomentSpec, domain: &SampleDomain, sampler: &mut DomainSampler, settings: &MomentSettings) -> Result<DiscreteDistribution> {
    let (points, cols, support) = phase_one_pool(spec, domain, sampler, settings)?;
    let _ = cols;
    Ok(support_distribution(&points, &support))
}

fn support_distribution(points: &[DVector<f64>], w: &[(usize, f64)]) -> DiscreteDistribution {
    DiscreteDistribution {
        points: w.iter().map(|&(j, _)| points[j].clone()).collect(),
        weights: w.iter().map(|&(_, v)| v).collect(),
    }
}

type Pool = (Vec<DVector<f64>>, Vec<DVector<f64>>, Vec<(usize, f64)>);

fn phase_one_pool(spec: &MomentSpec, domain: &SampleDomain, sampler: &mut DomainSampler, settings: &MomentSettings) -> Result<Pool> {
    let n = spec.len();
    let finite = domain.finite_points().map(<[_]>::len);
    let mut k0 = settings.initial_samples.unwrap_or((2 * n).max(50)).max(1);
    if let Some(k) = finite {
        k0 = k0.min(k);
        sampler.restart();
    }
    let mut points: Vec<DVector<f64>> = (0..k0).map(|_| sampler.sample(domain)).collect();
    let mut cols: Vec<DVector<f64>> = points.iter().map(|p| spec.evaluate(p)).collect();
    let scale = 1.0 + spec.l.iter().chain(&spec.u).fold(0.0_f64, |m, v| m.max(v.abs()));
    let scan = finite.map_or(settings.phase_one_samples, |k| k.min(settings.phase_one_samples.max(k)));

    for _ in 0..settings.max_lp_solves {
        let mut c = DVector::zeros(cols.len() + 2 * n);
        c.rows_mut(cols.len(), 2 * n).fill(-1.0);
        let sol = solve_bounded_lp(&lp_over(&cols, spec, c, true)?)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Numerical(format!("elastic LP returned {:?}", sol.status)));
        }
        if -sol.value <= 1e-10 * scale {
            let support: Vec<(usize, f64)> =
                (0..cols.len()).filter(|&j| sol.w[j] > WEIGHT_TOL).map(|j| (j, sol.w[j])).collect();
            return Ok((points, cols, support));
        }
        if finite.is_some() {
            sampler.restart();
        }
        let tol = settings.rc_tol * scale;
        let mut found = false;
        for _ in 0..scan {
            let xi = sampler.sample(domain);
            let f = spec.evaluate(&xi);
            if -sol.duals.dot(&f) > tol {
                points.push(xi);
                cols.push(f);
                found = true;
                break;
            }
        }
        if !found {
            return Err(Error::PhaseOneExhausted);
        }
    }
    Err(Error::PhaseOneExhausted)
}

/// Column-generation state kept across calls, so that later objectives start
/// from the columns found for earlier ones.
#[derive(Debug, Clone)]
pub struct MomentOracle {
    spec: MomentSpec,
    domain: SampleDomain,
    pub settings: MomentSettings,
    sampler: DomainSampler,
    points: Vec<DVector<f64>>,
    cols: Vec<DVector<f64>>,
    /// The first `anchored` pool entries support a feasible distribution.
    anchored: usize,
    last_basic: Vec<usize>,
    basis_lipschitz: Option<f64>,
}

impl MomentOracle {
    pub fn new(spec: MomentSpec, domain: SampleDomain, settings: MomentSettings, seed: u64) -> Result<Self> {
        spec.check_against(&domain, &domain.probe_points())?;
        let m = domain.abs_bound();
        let lips: Option<Vec<f64>> = spec.basis.iter().map(|f| f.lipschitz(m)).collect();
        Ok(Self {
            spec,
            domain,
            settings,
            sampler: DomainSampler::new(ChaCha8Rng::seed_from_u64(seed)),
            points: Vec::new(),
            cols: Vec::new(),
            anchored: 0,
            last_basic: Vec::new(),
            basis_lipschitz: lips.map(|v| v.into_iter().fold(0.0, f64::max)),
        })
    }

    pub fn spec(&self) -> &MomentSpec {
        &self.spec
    }

    pub fn domain(&self) -> &SampleDomain {
        &self.domain
    }

    pub fn pool_size(&self) -> usize {
        self.points.len()
    }

    fn ensure_feasible(&mut self) -> Result<()> {
        if self.anchored > 0 {
            return Ok(());
        }
        let (points, cols, support) = phase_one_pool(&self.spec, &self.domain, &mut self.sampler, &self.settings)?;
        // Support first, then the other phase-one columns.
        let mut order: Vec<usize> = support.iter().map(|&(j, _)| j).collect();
        let rest: Vec<usize> = (0..points.len()).filter(|j| !order.contains(j)).collect();
        order.extend(rest);
        self.points = order.iter().map(|&j| points[j].clone()).collect();
        self.cols = order.iter().map(|&j| cols[j].clone()).collect();
        self.anchored = support.len();
        Ok(())
    }

    fn prune(&mut self) {
        let cap = self.settings.max_pool.max(2 * self.spec.len());
        if self.points.len() <= cap {
            return;
        }
        let recent = self.points.len() - cap / 2;
        let keep: Vec<usize> = (0..self.points.len())
            .filter(|j| *j < self.anchored || *j >= recent || self.last_basic.contains(j))
            .collect();
        self.points = keep.iter().map(|&j| self.points[j].clone()).collect();
        self.cols = keep.iter().map(|&j| self.cols[j].clone()).collect();
        self.last_basic.clear();
    }

    /// Sample count for one certification, with the bound `C` and implied
    /// failure probability when available.
    fn budget(&mut self, duals: &DVector<f64>, h: &dyn Fn(&DVector<f64>) -> f64, h_lipschitz: Option<f64>) -> (usize, Option<f64>, bool, Option<f64>) {
        let finite = self.domain.finite_points().is_some();
        let (c, heuristic) = if finite {
            (None, false)
        } else {
            match (h_lipschitz, self.basis_lipschitz) {
                (Some(lh), Some(lf)) => (Some(lh + lf * duals.abs().sum()), false),
                _ => (Some(self.estimate_gradient_bound(duals, h)), true),
            }
        };
        let p = p_bound(self.settings.eps, c.unwrap_or(1.0), &self.domain);
        let m = match self.settings.budget {
            SampleBudget::Fixed(m) => m,
            SampleBudget::Confidence { delta, max } => {
                required_samples(self.settings.eps, c.unwrap_or(1.0).max(f64::MIN_POSITIVE), &self.domain, delta)
                    .unwrap_or(max)
                    .min(max)
            }
        };
        let delta = (p > 0.0).then(|| (m as f64 * (-p.min(1.0 - 1e-12)).ln_1p()).exp());
        (m.max(1), c, heuristic, delta)
    }

    /// Twice the largest finite-difference gradient norm of the reduced cost
    /// over 1000 samples.
    fn estimate_gradient_bound(&mut self, duals: &DVector<f64>, h: &dyn Fn(&DVector<f64>) -> f64) -> f64 {
        let d = self.domain.dim();
        let rc = |xi: &DVector<f64>| h(xi) - duals.dot(&self.spec.evaluate(xi));
        let mut best = 0.0_f64;
        for _ in 0..1000 {
            let xi = self.sampler.sample(&self.domain);
            let base = rc(&xi);
            let mut g2 = 0.0;
            for j in 0..d {
                let step = 1e-6 * (1.0 + xi[j].abs());
                let mut probe = xi.clone();
                probe[j] += step;
                let signed = if self.domain.contains(&probe) {
                    step
                } else {
                    probe[j] = xi[j] - step;
                    -step
                };
                let slope = (rc(&probe) - base) / signed;
                if slope.is_finite() {
                    g2 += slope * slope;
                }
            }
            best = best.max(g2.sqrt());
        }
        2.0 * best.max(f64::MIN_POSITIVE)
    }

    /// Maximizes `E_P[h]`. With a threshold, returns as soon as some LP
    /// iterate exceeds it.
    pub fn maximize(&mut self, h: &dyn Fn(&DVector<f64>) -> f64, h_lipschitz: Option<f64>, threshold: Option<f64>) -> Result<OracleOutcome> {
        self.ensure_feasible()?;
        self.prune();
        let mut hvals = Vec::with_capacity(self.points.len());
        for p in &self.points {
            hvals.push(checked(h(p))?);
        }
        let finite = self.domain.finite_points().is_some();
        let mut lp_values = Vec::new();
        let mut lp_solves = 0;
        loop {
            if lp_solves >= self.settings.max_lp_solves {
                return Err(Error::InnerIterationLimit(format!(
                    "moment oracle: {} LP re-solves without certificate",
                    self.settings.max_lp_solves
                )));
            }
            let sol = solve_pricing(&self.cols, &self.spec, &hvals)?;
            lp_solves += 1;
            lp_values.push(sol.value);
            self.last_basic = sol.basic_columns.clone();
            let support: Vec<(usize, f64)> =
                (0..self.points.len()).filter(|&j| sol.w[j] > WEIGHT_TOL).map(|j| (j, sol.w[j])).collect();
            let mut outcome = OracleOutcome {
                distribution: support_distribution(&self.points, &support),
                value: sol.value,
                certificate: Certificate::EarlyViolation,
                lp_solves,
                lp_values: Vec::new(),
                gradient_bound: None,
                heuristic_bound: false,
                implied_delta: None,
            };
            if threshold.is_some_and(|t| sol.value > t) {
                outcome.lp_values = lp_values;
                return Ok(outcome);
            }
            let (m, c, heuristic, delta) = self.budget(&sol.duals, h, h_lipschitz);
            if finite {
                self.sampler.restart();
            }
            let tol = self.settings.rc_tol * (1.0 + sol.value.abs());
            let mut entered = None;
            for _ in 0..m {
                let xi = self.sampler.sample(&self.domain);
                let f = self.spec.evaluate(&xi);
                let hv = checked(h(&xi))?;
                if hv - sol.duals.dot(&f) > tol {
                    entered = Some((xi, f, hv));
                    break;
                }
            }
            match entered {
                Some((xi, f, hv)) => {
                    self.points.push(xi);
                    self.cols.push(f);
                    hvals.push(hv);
                }
                None => {
                    outcome.certificate = Certificate::EpsOptimal { samples: m };
                    outcome.gradient_bound = c;
                    outcome.heuristic_bound = heuristic;
                    outcome.implied_delta = delta;
                    outcome.lp_values = lp_values;
                    return Ok(outcome);
                }
            }
        }
    }
}

fn checked(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numerical(format!("objective value {v} on the domain")))
    }
}

/// One-shot form of [`MomentOracle::maximize`].
pub fn maximize_expectation(
    h: &dyn Fn(&DVector<f64>) -> f64,
    spec: &MomentSpec,
    domain: &SampleDomain,
    settings: &MomentSettings,
    seed: u64,
    threshold: Option<f64>,
) -> Result<OracleOutcome> {
    MomentOracle::new(spec.clone(), domain.clone(), *settings, seed)?.maximize(h, None, threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> SampleDomain {
        SampleDomain::interval(0.0, 1.0).unwrap()
    }

    fn sampler() -> DomainSampler {
        DomainSampler::new(ChaCha8Rng::seed_from_u64(3))
    }

    fn v(x: f64) -> DVector<f64> {
        DVector::from_vec(vec![x])
    }

    #[test]
    fn phase_one_examples() {
        let s = MomentSettings::default();
        let mass = MomentSpec::power_moments(&[1.0]).unwrap();
        let d = phase_one(&mass, &unit(), &mut sampler(), &s).unwrap();
        assert_eq!(d.support_size(), 1);
        assert!((d.weights[0] - 1.0).abs() < 1e-12);

        let mean = MomentSpec::power_moments(&[1.0, 0.5]).unwrap();
        let d = phase_one(&mean, &unit(), &mut sampler(), &s).unwrap();
        assert!((d.expectation(|x| x[0]) - 0.5).abs() < 1e-8);
        assert!(d.moment_violation(&mean) <= 1e-8);
        assert!(d.support_size() <= 2);

        let far = MomentSpec::power_moments(&[1.0, 2.0]).unwrap();
        let small = MomentSettings { phase_one_samples: 2000, ..s };
        assert_eq!(phase_one(&far, &unit(), &mut sampler(), &small), Err(Error::PhaseOneExhausted));
    }

    #[test]
    fn pricing_on_three_points() {
        let spec = MomentSpec::power_moments(&[1.0, 0.5]).unwrap();
        let support = vec![v(0.0), v(0.5), v(1.0)];
        let h = |x: &DVector<f64>| x[0] * x[0];
        let hv: Vec<f64> = support.iter().map(h).collect();
        let sol = pricing_duals(&support, &spec, &hv).unwrap();
        assert!((sol.value - 0.5).abs() < 1e-12);
        assert!((sol.w[0] - 0.5).abs() < 1e-12 && sol.w[1].abs() < 1e-12 && (sol.w[2] - 0.5).abs() < 1e-12);
        assert!((sol.value - sol.dual_value(&BoundedLp::new(
            DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 1.0, 0.0, 0.5, 1.0]),
            DVector::from_vec(hv.clone()),
            DVector::from_vec(vec![1.0, 0.5]),
            DVector::from_vec(vec![1.0, 0.5]),
        ).unwrap())).abs() < 1e-8);
        // Support points with weight have zero reduced cost; 0.25 lies below the chord.
        for x in [0.0, 1.0] {
            assert!(reduced_cost(&v(x), &sol.duals, &h, &spec, &unit()).unwrap().abs() < 1e-8);
        }
        assert!(reduced_cost(&v(0.25), &sol.duals, &h, &spec, &unit()).unwrap() < 0.0);
        assert_eq!(reduced_cost(&v(1.5), &sol.duals, &h, &spec, &unit()), Err(Error::OutsideDomain));
    }

    #[test]
    fn zero_objective_has_zero_prices_on_slack_rows() {
        let basis = MomentSpec::uniform_moments(1).basis;
        let spec = MomentSpec::new(basis, vec![1.0, 0.2], vec![1.0, 0.8]).unwrap();
        let support = vec![v(0.5), v(0.6)];
        let sol = pricing_duals(&support, &spec, &[0.0, 0.0]).unwrap();
        assert_eq!(sol.value, 0.0);
        let h = |_: &DVector<f64>| 0.0;
        for x in [0.0, 0.3, 1.0] {
            assert!(reduced_cost(&v(x), &sol.duals, &h, &spec, &unit()).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn maximize_examples() {
        let s = MomentSettings::default();
        let constant = maximize_expectation(&|_| 2.5, &MomentSpec::uniform_moments(3), &unit(), &s, 1, None).unwrap();
        assert!((constant.value - 2.5).abs() < 1e-9);

        let pinned = maximize_expectation(&|x| x[0] * x[0], &MomentSpec::uniform_moments(2), &unit(), &s, 1, None).unwrap();
        assert!((pinned.value - 1.0 / 3.0).abs() < 1e-9);

        // Chord of xi^2 through the endpoints; the volume bound sizes the budget.
        let spec = MomentSpec::uniform_moments(1);
        let budget = SampleBudget::Confidence { delta: 0.01, max: 1_000_000 };
        let s = MomentSettings { eps: 1e-3, budget, ..s };
        let mut oracle = MomentOracle::new(spec.clone(), unit(), s, 1).unwrap();
        let out = oracle.maximize(&|x| x[0] * x[0], Some(2.0), None).unwrap();
        assert!((out.value - 0.5).abs() < s.eps, "{}", out.value);
        assert!(out.distribution.points.iter().zip(&out.distribution.weights).all(|(p, w)| *w < 1e-3 || p[0] < 0.01 || p[0] > 0.99));
        assert!(out.distribution.moment_violation(&spec) <= 1e-8);
        assert!(out.lp_values.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!(matches!(out.certificate, Certificate::EpsOptimal { .. }));
        assert!(out.implied_delta.unwrap() <= 0.01 + 1e-12);
    }

    #[test]
    fn early_stop_and_determinism() {
        let s = MomentSettings::default();
        let spec = MomentSpec::uniform_moments(2);
        let h = |x: &DVector<f64>| (PI * x[0]).sin();
        let a = maximize_expectation(&h, &spec, &unit(), &s, 9, None).unwrap();
        let b = maximize_expectation(&h, &spec, &unit(), &s, 9, None).unwrap();
        assert_eq!(a, b);
        let early = maximize_expectation(&h, &spec, &unit(), &s, 9, Some(0.0)).unwrap();
        assert_eq!(early.certificate, Certificate::EarlyViolation);
        assert!(early.value > 0.0);
    }

    #[test]
    fn sample_count_arithmetic() {
        let dom = unit();
        let p = p_bound(0.1, 1.0, &dom);
        assert!((p - 0.05 / (6.0 * PI).sqrt()).abs() < 1e-15);
        assert!((p - 0.011516).abs() < 1e-6);
        assert_eq!(required_samples(0.1, 1.0, &dom, 0.01).unwrap(), 398);
        assert_eq!(required_samples(0.1, 1.0, &dom, 1.0 - 1e-15).unwrap(), 1);
        let half = required_samples(0.05, 1.0, &dom, 0.01).unwrap() as f64;
        assert!((half / 398.0 - 2.0).abs() < 0.02);
        assert!(required_samples(0.0, 1.0, &dom, 0.5).is_err());
    }

    #[test]
    fn confidence_budget_reports_bound() {
        let spec = MomentSpec::uniform_moments(1);
        let s = MomentSettings { budget: SampleBudget::Confidence { delta: 0.01, max: 5000 }, eps: 0.1, ..Default::default() };
        let mut oracle = MomentOracle::new(spec, unit(), s, 4).unwrap();
        let out = oracle.maximize(&|x| x[0] * x[0], Some(2.0), None).unwrap();
        let c = out.gradient_bound.unwrap();
        assert!(c >= 2.0 && !out.heuristic_bound);
        assert!(out.implied_delta.unwrap() <= 0.01 + 1e-12 || matches!(out.certificate, Certificate::EpsOptimal { samples: 5000 }));
        let est = oracle.maximize(&|x| x[0] * x[0], None, None).unwrap();
        assert!(est.heuristic_bound && est.gradient_bound.unwrap() > 0.0);
    }
}
