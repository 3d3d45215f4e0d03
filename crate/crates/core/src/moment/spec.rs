//! Moment sets `{P : l_i <= E_P[f_i] <= u_i}` and their config-file form.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use serde::Deserialize;

use super::domain::SampleDomain;
use crate::error::{Error, Result};

type BasisFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum BasisFunction {
    /// `prod_j xi_j^{a_j}`.
    Monomial(Vec<u32>),
    Custom {
        name: String,
        f: BasisFn,
        /// Bound on the gradient norm over the domain, if known.
        lipschitz: Option<f64>,
    },
}

impl fmt::Debug for BasisFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Monomial(a) => write!(f, "Monomial({a:?})"),
            Self::Custom { name, lipschitz, .. } => write!(f, "Custom({name}, lipschitz={lipschitz:?})"),
        }
    }
}

impl BasisFunction {
    pub fn constant(dim: usize) -> Self {
        Self::Monomial(vec![0; dim])
    }

    /// `xi_coord^order`.
    pub fn marginal(dim: usize, coord: usize, order: u32) -> Self {
        let mut a = vec![0; dim];
        a[coord] = order;
        Self::Monomial(a)
    }

    pub fn custom(name: &str, f: impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'static, lipschitz: Option<f64>) -> Self {
        Self::Custom { name: name.into(), f: Arc::new(f), lipschitz }
    }

    pub fn eval(&self, xi: &DVector<f64>) -> f64 {
        match self {
            Self::Monomial(a) => a.iter().zip(xi.iter()).map(|(&p, &x)| x.powi(p as i32)).product(),
            Self::Custom { f, .. } => f(xi),
        }
    }

    pub fn is_constant_one(&self) -> bool {
        matches!(self, Self::Monomial(a) if a.iter().all(|&p| p == 0))
    }

    /// Gradient-norm bound on a domain whose coordinates satisfy `|xi_j| <= m`.
    pub fn lipschitz(&self, m: f64) -> Option<f64> {
        match self {
            Self::Monomial(a) => {
                let deg: u32 = a.iter().sum();
                if deg == 0 {
                    return Some(0.0);
                }
                let scale = m.max(0.0).powi(deg as i32 - 1);
                Some(a.iter().map(|&p| (p as f64 * scale).powi(2)).sum::<f64>().sqrt())
            }
            Self::Custom { lipschitz, .. } => *lipschitz,
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            Self::Monomial(a) => Some(a.len()),
            Self::Custom { .. } => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MomentSpec {
    pub basis: Vec<BasisFunction>,
    pub l: Vec<f64>,
    pub u: Vec<f64>,
}

impl MomentSpec {
    /// The first basis function must be the constant one with `l = u = 1`.
    pub fn new(basis: Vec<BasisFunction>, l: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        if basis.is_empty() || basis.len() != l.len() || basis.len() != u.len() {
            return Err(Error::InvalidProblem(format!(
                "moment spec sizes: {} functions, {} lower, {} upper",
                basis.len(),
                l.len(),
                u.len()
            )));
        }
        if !basis[0].is_constant_one() || l[0] != 1.0 || u[0] != 1.0 {
            return Err(Error::InvalidProblem("first moment must be the unit mass".into()));
        }
        for i in 0..l.len() {
            if !(l[i].is_finite() && u[i].is_finite()) || l[i] > u[i] {
                return Err(Error::InvalidProblem(format!("moment {i} bounds [{}, {}]", l[i], u[i])));
            }
        }
        Ok(Self { basis, l, u })
    }

    /// `E[xi^i] = values[i]` for `i = 0..=m` on a one-dimensional domain.
    pub fn power_moments(values: &[f64]) -> Result<Self> {
        let basis = (0..values.len()).map(|i| BasisFunction::Monomial(vec![i as u32])).collect();
        Self::new(basis, values.to_vec(), values.to_vec())
    }

    /// First `m` power moments of the uniform distribution on `[0, 1]`.
    pub fn uniform_moments(m: usize) -> Self {
        let v: Vec<f64> = (0..=m).map(|i| 1.0 / (i + 1) as f64).collect();
        Self::power_moments(&v).expect("valid by construction")
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// `(f_1(xi), ..., f_N(xi))`.
    pub fn evaluate(&self, xi: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.basis.len(), self.basis.iter().map(|f| f.eval(xi)))
    }

    /// Checks that monomial arities match the domain and that every function
    /// is finite on a few domain points.
    pub fn check_against(&self, domain: &SampleDomain, probes: &[DVector<f64>]) -> Result<()> {
        for (i, f) in self.basis.iter().enumerate() {
            if let Some(d) = f.dim() {
                if d != domain.dim() {
                    return Err(Error::InvalidProblem(format!(
                        "moment {i} has {d} exponents for a {}-dimensional domain",
                        domain.dim()
                    )));
                }
            }
        }
        for xi in probes {
            if let Some(i) = self.evaluate(xi).iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidProblem(format!("moment function {i} is not finite at {xi:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MomentFile {
    domain: DomainEntry,
    #[serde(default)]
    moment: Vec<MomentEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum DomainEntry {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Simplex { vertices: Vec<Vec<f64>> },
    Finite { points: Vec<Vec<f64>> },
    Grid { lo: f64, hi: f64, points: usize },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MomentEntry {
    monomial: Option<Vec<u32>>,
    marginal: Option<Marginal>,
    value: Option<f64>,
    lower: Option<f64>,
    upper: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Marginal {
    coord: usize,
    order: u32,
}

/// Parses a moment file:
///
/// ```toml
/// [domain]
/// box = { lo = [0.0], hi = [1.0] }
///
/// [[moment]]
/// monomial = [1]
/// value = 0.5
///
/// [[moment]]
/// marginal = { coord = 0, order = 2 }
/// lower = 0.3
/// upper = 0.35
/// ```
///
/// The unit-mass row is prepended unless the first entry already is one.
pub fn parse_moment_file(text: &str) -> Result<(MomentSpec, SampleDomain)> {
    let file: MomentFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let domain = match file.domain {
        DomainEntry::Box { lo, hi } => SampleDomain::boxed(lo, hi)?,
        DomainEntry::Ball { center, radius } => SampleDomain::ball(center, radius)?,
        DomainEntry::Simplex { vertices } => SampleDomain::simplex(vertices)?,
        DomainEntry::Finite { points } => SampleDomain::finite(points)?,
        DomainEntry::Grid { lo, hi, points } => SampleDomain::grid(lo, hi, points)?,
    };
    let dim = domain.dim();
    let mut basis = Vec::new();
    let mut l = Vec::new();
    let mut u = Vec::new();
    for (k, e) in file.moment.iter().enumerate() {
        let f = match (&e.monomial, &e.marginal) {
            (Some(a), None) => BasisFunction::Monomial(a.clone()),
            (None, Some(m)) if m.coord < dim => BasisFunction::marginal(dim, m.coord, m.order),
            (None, Some(m)) => {
                return Err(Error::Config(format!("moment {k}: coordinate {} out of range", m.coord)));
            }
            _ => return Err(Error::Config(format!("moment {k}: give exactly one of `monomial`, `marginal`"))),
        };
        let (lo, hi) = match (e.value, e.lower, e.upper) {
            (Some(v), None, None) => (v, v),
            (None, Some(a), Some(b)) => (a, b),
            _ => return Err(Error::Config(format!("moment {k}: give `value` or both `lower` and `upper`"))),
        };
        basis.push(f);
        l.push(lo);
        u.push(hi);
    }
    if basis.first().is_none_or(|f| !f.is_constant_one()) {
        basis.insert(0, BasisFunction::constant(dim));
        l.insert(0, 1.0);
        u.insert(0, 1.0);
    }
    let spec = MomentSpec::new(basis, l, u).map_err(|e| Error::Config(e.to_string()))?;
    spec.check_against(&domain, &domain.probe_points())?;
    Ok((spec, domain))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_values_and_bounds() {
        let f = BasisFunction::Monomial(vec![2, 1]);
        let xi = DVector::from_vec(vec![3.0, -2.0]);
        assert_eq!(f.eval(&xi), -18.0);
        // grad = (2 x y, x^2), |.| <= (2 m^2, m^2).
        let lip = f.lipschitz(1.0).unwrap();
        assert!((lip - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(BasisFunction::constant(2).lipschitz(7.0), Some(0.0));
    }

    #[test]
    fn mass_row_required() {
        let basis = vec![BasisFunction::Monomial(vec![1])];
        assert!(MomentSpec::new(basis, vec![0.5], vec![0.5]).is_err());
        assert!(MomentSpec::power_moments(&[1.0, 0.5]).is_ok());
        assert!(MomentSpec::power_moments(&[0.9, 0.5]).is_err());
    }

    #[test]
    fn parses_file_and_prepends_mass() {
        let text = r#"
            [domain]
            box = { lo = [0.0, 0.0], hi = [1.0, 2.0] }

            [[moment]]
            monomial = [1, 0]
            value = 0.5

            [[moment]]
            marginal = { coord = 1, order = 2 }
            lower = 1.0
            upper = 1.5
        "#;
        let (spec, domain) = parse_moment_file(text).unwrap();
        assert_eq!(spec.len(), 3);
        assert!(spec.basis[0].is_constant_one());
        assert_eq!(spec.l, vec![1.0, 0.5, 1.0]);
        assert_eq!(spec.u, vec![1.0, 0.5, 1.5]);
        assert_eq!(domain.dim(), 2);
    }

    #[test]
    fn rejects_bad_files() {
        let bad_arity = "[domain]\nbox = { lo = [0.0], hi = [1.0] }\n[[moment]]\nmonomial = [1, 1]\nvalue = 0.2\n";
        assert!(parse_moment_file(bad_arity).is_err());
        let both = "[domain]\nbox = { lo = [0.0], hi = [1.0] }\n[[moment]]\nmonomial = [1]\nvalue = 0.2\nlower = 0.1\n";
        assert!(parse_moment_file(both).is_err());
        assert!(parse_moment_file("[domain]\ncube = 3\n").is_err());
    }
}
