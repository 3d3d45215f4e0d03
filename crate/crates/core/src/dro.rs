//! Distributionally robust problems as semi-infinite programs indexed by the
//! moment set.
//!
//! Objective form: `min z s.t. -z + E_P[h(x, xi)] <= 0 for all P`, decision
//! vector `(z, x)`. Constraint form: `E_P[G(v, xi)] <= 0 for all P` on a
//! decision vector `v` whose first coordinate is already the objective.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::cutting::SeparationOracle;
use crate::error::{Error, Result};
use crate::moment::{DiscreteDistribution, DomainSampler, MomentOracle, MomentSpec, SampleDomain};
use crate::problem::{DecisionBox, SemiInfiniteFamily, SicpProblem, SlaterInfo, StaticConstraint};

pub trait ScenarioFunction: Send + Sync {
    /// `h(x, xi)` and a subgradient in `x`.
    fn eval(&self, x: &DVector<f64>, xi: &DVector<f64>) -> (f64, DVector<f64>);

    fn hessian(&self, _x: &DVector<f64>, _xi: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }

    /// Bound on the subgradient norm over the decision box and the domain.
    fn subgradient_bound(&self) -> f64;

    fn is_smooth(&self) -> bool {
        true
    }
}

/// A cut index: the distribution itself, points and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionCutIndex {
    pub distribution: DiscreteDistribution,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DroForm {
    Objective { z_min: f64, z_max: f64 },
    Constraint,
}

#[derive(Clone)]
pub struct DroFamily {
    pub h: Arc<dyn ScenarioFunction>,
    pub form: DroForm,
}

impl fmt::Debug for DroFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DroFamily").field("form", &self.form).finish_non_exhaustive()
    }
}

impl DroFamily {
    /// The argument `h` sees and the part of `g` that does not depend on `P`.
    fn split(&self, v: &DVector<f64>) -> (DVector<f64>, f64) {
        match self.form {
            DroForm::Objective { .. } => (v.rows(1, v.len() - 1).into_owned(), -v[0]),
            DroForm::Constraint => (v.clone(), 0.0),
        }
    }

    /// `g(v, P) - E_P[h]`: `-z` in objective form, zero otherwise.
    pub fn offset(&self, v: &DVector<f64>) -> f64 {
        self.split(v).1
    }

    /// `h(x(v), .)` as a function of the scenario.
    pub fn scenario_values<'a>(&'a self, v: &DVector<f64>) -> impl Fn(&DVector<f64>) -> f64 + 'a {
        let x = self.split(v).0;
        move |xi| self.h.eval(&x, xi).0
    }

    fn lift(&self, g: DVector<f64>) -> DVector<f64> {
        match self.form {
            DroForm::Objective { .. } => {
                let mut out = DVector::zeros(g.len() + 1);
                out[0] = -1.0;
                out.rows_mut(1, g.len()).copy_from(&g);
                out
            }
            DroForm::Constraint => g,
        }
    }
}

/// `sum_k w_k dh(x, xi_k)`.
pub fn expectation_subgradient(h: &dyn ScenarioFunction, x: &DVector<f64>, p: &DiscreteDistribution) -> DVector<f64> {
    let mut g = DVector::zeros(x.len());
    for (xi, w) in p.points.iter().zip(&p.weights) {
        g.axpy(*w, &h.eval(x, xi).1, 1.0);
    }
    g
}

impl SemiInfiniteFamily for DroFamily {
    type Index = DistributionCutIndex;

    fn evaluate(&self, v: &DVector<f64>, t: &DistributionCutIndex) -> Result<(f64, DVector<f64>)> {
        let (x, offset) = self.split(v);
        let p = &t.distribution;
        let value = offset + p.expectation(|xi| self.h.eval(&x, xi).0);
        Ok((value, self.lift(expectation_subgradient(self.h.as_ref(), &x, p))))
    }

    fn hessian(&self, v: &DVector<f64>, t: &DistributionCutIndex) -> Result<Option<DMatrix<f64>>> {
        let (x, _) = self.split(v);
        let n = x.len();
        let mut acc = DMatrix::zeros(n, n);
        for (xi, w) in t.distribution.points.iter().zip(&t.distribution.weights) {
            match self.h.hessian(&x, xi) {
                Some(hm) => acc += hm * *w,
                None => return Ok(None),
            }
        }
        Ok(Some(match self.form {
            DroForm::Objective { .. } => {
                let mut big = DMatrix::zeros(n + 1, n + 1);
                big.view_mut((1, 1), (n, n)).copy_from(&acc);
                big
            }
            DroForm::Constraint => acc,
        }))
    }

    fn is_smooth(&self) -> bool {
        self.h.is_smooth()
    }
}

pub struct DroProblem {
    pub name: String,
    /// Box on `x` (objective form) or on the whole decision vector.
    pub bounds: DecisionBox,
    /// Static constraints on the SICP decision vector.
    pub statics: Vec<Arc<dyn StaticConstraint>>,
    pub h: Arc<dyn ScenarioFunction>,
    pub spec: MomentSpec,
    pub domain: SampleDomain,
    pub form: DroForm,
    /// Required in constraint form; derived from `z_max` in objective form.
    pub slater: Option<SlaterInfo>,
}

/// Largest `h(x, xi)` over `samples` uniform scenarios plus the domain probes.
fn sampled_max(h: &dyn ScenarioFunction, x: &DVector<f64>, domain: &SampleDomain, samples: usize) -> f64 {
    use rand::SeedableRng;
    let mut sampler = DomainSampler::new(rand_chacha::ChaCha8Rng::seed_from_u64(0));
    let mut best = domain.probe_points().iter().map(|xi| h.eval(x, xi).0).fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..samples {
        best = best.max(h.eval(x, &sampler.sample(domain)).0);
    }
    best
}

/// Coarse `z_min`: the smallest sampled `h` over a grid of box points.
pub fn coarse_z_min(h: &dyn ScenarioFunction, bounds: &DecisionBox, domain: &SampleDomain) -> f64 {
    use rand::SeedableRng;
    let n = bounds.dim();
    let per_axis: usize = if n <= 4 { 5 } else { 2 };
    let total = per_axis.saturating_pow(n as u32).min(4096);
    let mut sampler = DomainSampler::new(rand_chacha::ChaCha8Rng::seed_from_u64(1));
    let xis: Vec<DVector<f64>> = (0..64).map(|_| sampler.sample(domain)).chain(domain.probe_points()).collect();
    let mut best = f64::INFINITY;
    for k in 0..total {
        let mut rest = k;
        let x = DVector::from_fn(n, |i, _| {
            let j = rest % per_axis;
            rest /= per_axis;
            let (lo, hi) = (bounds.lower()[i], bounds.upper()[i]);
            lo + (hi - lo) * j as f64 / (per_axis - 1) as f64
        });
        for xi in &xis {
            best = best.min(h.eval(&x, xi).0);
        }
    }
    best
}

pub fn build_sicp(dro: &DroProblem) -> Result<SicpProblem<DroFamily>> {
    let family = DroFamily { h: dro.h.clone(), form: dro.form };
    let bh = dro.h.subgradient_bound();
    match dro.form {
        DroForm::Objective { z_min, z_max } => {
            if !(z_min <= z_max) {
                return Err(Error::InvalidProblem(format!("z bounds [{z_min}, {z_max}]")));
            }
            let mut lower = vec![z_min];
            let mut upper = vec![z_max];
            lower.extend_from_slice(dro.bounds.lower());
            upper.extend_from_slice(dro.bounds.upper());
            let center = DVector::from_fn(dro.bounds.dim(), |i, _| 0.5 * (dro.bounds.lower()[i] + dro.bounds.upper()[i]));
            let hmax = sampled_max(dro.h.as_ref(), &center, &dro.domain, 10_000);
            // Half the sampled margin, since sampling underestimates the max.
            let eta = 0.5 * (z_max - hmax);
            if !(eta > 0.0) {
                return Err(Error::InvalidProblem(format!("z_max {z_max} does not exceed max h {hmax} at the box center")));
            }
            let mut xbar = DVector::zeros(center.len() + 1);
            xbar[0] = z_max;
            xbar.rows_mut(1, center.len()).copy_from(&center);
            let slater = dro.slater.clone().unwrap_or(SlaterInfo { xbar, eta });
            Ok(SicpProblem {
                name: dro.name.clone(),
                bounds: DecisionBox::new(lower, upper)?,
                statics: dro.statics.clone(),
                family,
                slater,
                subgradient_bound: (1.0 + bh * bh).sqrt(),
                known_feasible_objective: Some(z_max),
            })
        }
        DroForm::Constraint => {
            let slater = dro
                .slater
                .clone()
                .ok_or_else(|| Error::InvalidProblem("constraint-form DRO needs a Slater point".into()))?;
            Ok(SicpProblem {
                name: dro.name.clone(),
                bounds: dro.bounds.clone(),
                statics: dro.statics.clone(),
                family,
                slater,
                subgradient_bound: bh,
                known_feasible_objective: None,
            })
        }
    }
}

/// Separation over the moment set through the randomized oracle, in its
/// early-stop mode.
#[derive(Debug, Clone)]
pub struct DroOracle {
    pub moment: MomentOracle,
    /// Lipschitz bound of `h(x, .)` in the scenario, if known.
    pub h_lipschitz: Option<f64>,
}

impl DroOracle {
    pub fn new(moment: MomentOracle) -> Self {
        Self { moment, h_lipschitz: None }
    }
}

impl SeparationOracle<DroFamily> for DroOracle {
    fn separate(&mut self, family: &DroFamily, v: &DVector<f64>, eps: f64) -> Result<Option<DistributionCutIndex>> {
        let offset = family.offset(v);
        let h = family.scenario_values(v);
        let out = self.moment.maximize(&h, self.h_lipschitz, Some(eps - offset))?;
        let spec = self.moment.spec();
        if out.value + offset > eps {
            let violation = out.distribution.moment_violation(spec);
            if violation > 1e-8 {
                return Err(Error::Numerical(format!("oracle distribution misses its moments by {violation:e}")));
            }
            return Ok(Some(DistributionCutIndex { distribution: out.distribution }));
        }
        Ok(None)
    }

    fn max_violation(&mut self, family: &DroFamily, v: &DVector<f64>) -> Result<f64> {
        let offset = family.offset(v);
        let h = family.scenario_values(v);
        Ok(self.moment.maximize(&h, self.h_lipschitz, None)?.value + offset)
    }
}

/// `Some(P)` with `E_P[h(x, .)] > z + eps` when the oracle finds one.
pub fn separate(oracle: &mut DroOracle, family: &DroFamily, v: &DVector<f64>, eps: f64) -> Result<Option<DistributionCutIndex>> {
    oracle.separate(family, v, eps)
}

/// Exact separation over an explicit list of distributions.
#[derive(Debug, Clone)]
pub struct FiniteIndexOracle {
    pub candidates: Vec<DistributionCutIndex>,
}

impl FiniteIndexOracle {
    fn best(&self, family: &DroFamily, v: &DVector<f64>) -> Result<Option<(usize, f64)>> {
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in self.candidates.iter().enumerate() {
            let g = family.evaluate(v, c)?.0;
            if best.is_none_or(|(_, b)| g > b) {
                best = Some((i, g));
            }
        }
        Ok(best)
    }
}

impl SeparationOracle<DroFamily> for FiniteIndexOracle {
    fn separate(&mut self, family: &DroFamily, v: &DVector<f64>, eps: f64) -> Result<Option<DistributionCutIndex>> {
        Ok(self.best(family, v)?.filter(|(_, g)| *g > eps).map(|(i, _)| self.candidates[i].clone()))
    }

    fn max_violation(&mut self, family: &DroFamily, v: &DVector<f64>) -> Result<f64> {
        Ok(self.best(family, v)?.map_or(f64::NEG_INFINITY, |(_, g)| g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moment::MomentSettings;

    /// `h(x, xi) = (a . x) xi`.
    struct Linear(DVector<f64>);

    impl ScenarioFunction for Linear {
        fn eval(&self, x: &DVector<f64>, xi: &DVector<f64>) -> (f64, DVector<f64>) {
            (self.0.dot(x) * xi[0], &self.0 * xi[0])
        }

        fn hessian(&self, x: &DVector<f64>, _xi: &DVector<f64>) -> Option<DMatrix<f64>> {
            Some(DMatrix::zeros(x.len(), x.len()))
        }

        fn subgradient_bound(&self) -> f64 {
            self.0.norm()
        }
    }

    fn dro(form: DroForm) -> DroProblem {
        DroProblem {
            name: "linear".into(),
            bounds: DecisionBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(),
            statics: vec![],
            h: Arc::new(Linear(DVector::from_vec(vec![1.0, 2.0]))),
            spec: MomentSpec::uniform_moments(1),
            domain: SampleDomain::interval(0.0, 1.0).unwrap(),
            form,
            slater: Some(SlaterInfo { xbar: DVector::from_vec(vec![-1.0, -1.0]), eta: 0.0 }),
        }
    }

    #[test]
    fn build_dimensions_and_point_mass() {
        let p = build_sicp(&dro(DroForm::Objective { z_min: -5.0, z_max: 5.0 })).unwrap();
        assert_eq!(p.dim(), 3);
        let v = DVector::from_vec(vec![0.5, 1.0, -0.25]);
        let idx = DistributionCutIndex { distribution: DiscreteDistribution::point_mass(DVector::from_vec(vec![0.4])) };
        let (g, d) = p.family.evaluate(&v, &idx).unwrap();
        // -z + (1 - 0.5) * 0.4
        assert!((g - (-0.5 + 0.2)).abs() < 1e-15);
        assert_eq!(d.as_slice(), &[-1.0, 0.4, 0.8]);
        assert!((p.subgradient_bound - 6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn linear_subgradient_uses_the_mean() {
        let h = Linear(DVector::from_vec(vec![3.0, -1.0]));
        let p = DiscreteDistribution::new(
            vec![DVector::from_vec(vec![0.2]), DVector::from_vec(vec![0.8])],
            vec![0.25, 0.75],
        )
        .unwrap();
        let g = expectation_subgradient(&h, &DVector::from_vec(vec![1.0, 1.0]), &p);
        assert!((g - DVector::from_vec(vec![3.0, -1.0]) * 0.65).norm() < 1e-15);
    }

    #[test]
    fn separation_examples() {
        let p = build_sicp(&dro(DroForm::Objective { z_min: -5.0, z_max: 5.0 })).unwrap();
        let moment = MomentOracle::new(p_spec(), SampleDomain::interval(0.0, 1.0).unwrap(), MomentSettings::default(), 2).unwrap();
        let mut oracle = DroOracle::new(moment);
        // x = (1, 0): h = xi, E_P[h] = 0.5 for every member.
        let below = DVector::from_vec(vec![0.3, 1.0, 0.0]);
        let cut = separate(&mut oracle, &p.family, &below, 1e-6).unwrap().unwrap();
        assert!(cut.distribution.moment_violation(&p_spec()) <= 1e-8);
        assert_eq!(oracle.moment.pool_size() > 0, true);
        let above = DVector::from_vec(vec![0.7, 1.0, 0.0]);
        assert_eq!(separate(&mut oracle, &p.family, &above, 1e-6).unwrap(), None);
        assert!((oracle.max_violation(&p.family, &above).unwrap() + 0.2).abs() < 1e-9);
    }

    fn p_spec() -> MomentSpec {
        MomentSpec::uniform_moments(1)
    }

    #[test]
    fn constraint_form_needs_slater() {
        let mut d = dro(DroForm::Constraint);
        assert!(build_sicp(&d).is_ok());
        d.slater = None;
        assert!(build_sicp(&d).is_err());
    }
}
