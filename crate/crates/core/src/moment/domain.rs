//! Sampling domains `Xi` with the ball radii `B(c1, r) ⊆ Xi ⊆ B(c2, R)`.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};

const MEMBER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Simplex { vertices: Vec<Vec<f64>> },
    /// A finite scenario set, sampled without replacement.
    Finite { points: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleDomain {
    pub shape: Shape,
    pub inner_radius: f64,
    pub outer_radius: f64,
    dim: usize,
    /// Barycentric map of a simplex: `lambda = T (xi - v0)` for the last `d`
    /// coordinates.
    bary: Option<DMatrix<f64>>,
}

impl SampleDomain {
    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !b.is_finite() || !a.is_finite()) {
            return Err(Error::InvalidProblem(format!("box domain [{lo:?}, {hi:?}]")));
        }
        let r = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (b - a)).fold(f64::INFINITY, f64::min);
        let big = 0.5 * lo.iter().zip(&hi).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt();
        let dim = lo.len();
        Ok(Self { shape: Shape::Box { lo, hi }, inner_radius: r, outer_radius: big, dim, bary: None })
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::boxed(vec![a], vec![b])
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() || !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidProblem(format!("ball domain radius {radius}")));
        }
        let dim = center.len();
        Ok(Self { shape: Shape::Ball { center, radius }, inner_radius: radius, outer_radius: radius, dim, bary: None })
    }

    /// `d + 1` affinely independent vertices in `R^d`.
    pub fn simplex(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let d = vertices.first().map_or(0, Vec::len);
        if d == 0 || vertices.len() != d + 1 || vertices.iter().any(|v| v.len() != d) {
            return Err(Error::InvalidProblem("simplex needs d + 1 vertices in R^d".into()));
        }
        let edges = DMatrix::from_fn(d, d, |i, j| vertices[j + 1][i] - vertices[0][i]);
        let t = edges
            .try_inverse()
            .ok_or_else(|| Error::InvalidProblem("degenerate simplex".into()))?;
        // lambda_j = t_j . (xi - v0) for j >= 1 and lambda_0 = 1 - sum; the
        // inradius is 1 / sum_j |grad lambda_j|.
        let mut total = 0.0;
        let mut first = DVector::zeros(d);
        for j in 0..d {
            let row = t.row(j).transpose();
            total += row.norm();
            first -= row;
        }
        total += first.norm();
        let centroid: Vec<f64> = (0..d).map(|i| vertices.iter().map(|v| v[i]).sum::<f64>() / (d + 1) as f64).collect();
        let outer = vertices.iter().map(|v| dist(v, &centroid)).fold(0.0, f64::max);
        Ok(Self { shape: Shape::Simplex { vertices }, inner_radius: 1.0 / total, outer_radius: outer, dim: d, bary: Some(t) })
    }

    pub fn finite(points: Vec<Vec<f64>>) -> Result<Self> {
        let d = points.first().map_or(0, Vec::len);
        if d == 0 || points.iter().any(|p| p.len() != d || p.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidProblem("finite domain needs equal-length finite points".into()));
        }
        let mean: Vec<f64> = (0..d).map(|i| points.iter().map(|p| p[i]).sum::<f64>() / points.len() as f64).collect();
        let outer = points.iter().map(|p| dist(p, &mean)).fold(0.0, f64::max);
        Ok(Self { shape: Shape::Finite { points }, inner_radius: 0.0, outer_radius: outer, dim: d, bary: None })
    }

    /// `points` equispaced values in `[lo, hi]`, endpoints included.
    pub fn grid(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if points < 2 || !(lo < hi) {
            return Err(Error::InvalidProblem(format!("grid [{lo}, {hi}] with {points} points")));
        }
        let h = (hi - lo) / (points - 1) as f64;
        Self::finite((0..points).map(|i| vec![if i + 1 == points { hi } else { lo + h * i as f64 }]).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn finite_points(&self) -> Option<&[Vec<f64>]> {
        match &self.shape {
            Shape::Finite { points } => Some(points),
            _ => None,
        }
    }

    pub fn contains(&self, xi: &DVector<f64>) -> bool {
        if xi.len() != self.dim {
            return false;
        }
        match &self.shape {
            Shape::Box { lo, hi } => (0..self.dim).all(|i| xi[i] >= lo[i] - MEMBER_TOL && xi[i] <= hi[i] + MEMBER_TOL),
            Shape::Ball { center, radius } => dist(xi.as_slice(), center) <= radius * (1.0 + MEMBER_TOL) + MEMBER_TOL,
            Shape::Simplex { vertices } => {
                let t = self.bary.as_ref().expect("simplex map");
                let shifted = DVector::from_fn(self.dim, |i, _| xi[i] - vertices[0][i]);
                let lam = t * shifted;
                lam.iter().all(|&l| l >= -MEMBER_TOL) && lam.sum() <= 1.0 + MEMBER_TOL
            }
            Shape::Finite { points } => points.iter().any(|p| dist(p, xi.as_slice()) <= MEMBER_TOL),
        }
    }

    /// Largest coordinate magnitude on the domain.
    pub fn abs_bound(&self) -> f64 {
        let over = |ps: &[Vec<f64>]| ps.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
        match &self.shape {
            Shape::Box { lo, hi } => lo.iter().chain(hi).fold(0.0_f64, |m, v| m.max(v.abs())),
            Shape::Ball { center, radius } => center.iter().fold(0.0_f64, |m, v| m.max(v.abs())) + radius,
            Shape::Simplex { vertices } => over(vertices),
            Shape::Finite { points } => over(points),
        }
    }

    /// A few deterministic points of the domain, for sanity checks.
    pub fn probe_points(&self) -> Vec<DVector<f64>> {
        match &self.shape {
            Shape::Box { lo, hi } => vec![
                DVector::from_column_slice(lo),
                DVector::from_column_slice(hi),
                DVector::from_fn(self.dim, |i, _| 0.5 * (lo[i] + hi[i])),
            ],
            Shape::Ball { center, .. } => vec![DVector::from_column_slice(center)],
            Shape::Simplex { vertices } | Shape::Finite { points: vertices } => {
                vertices.iter().take(16).map(|v| DVector::from_column_slice(v)).collect()
            }
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Uniform sampler over a domain; finite domains are visited in shuffled
/// passes so that `K` consecutive draws cover every point.
#[derive(Debug, Clone)]
pub struct DomainSampler {
    rng: ChaCha8Rng,
    order: Vec<usize>,
    next: usize,
}

impl DomainSampler {
    pub fn new(rng: ChaCha8Rng) -> Self {
        Self { rng, order: Vec::new(), next: 0 }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Starts a fresh shuffled pass over a finite domain.
    pub fn restart(&mut self) {
        self.next = usize::MAX;
    }

    pub fn sample(&mut self, domain: &SampleDomain) -> DVector<f64> {
        let d = domain.dim();
        match &domain.shape {
            Shape::Box { lo, hi } => DVector::from_fn(d, |i, _| self.rng.random_range(lo[i]..=hi[i])),
            Shape::Ball { center, radius } => {
                let dir = DVector::from_fn(d, |_, _| -> f64 { StandardNormal.sample(&mut self.rng) });
                let norm: f64 = dir.norm();
                let u: f64 = self.rng.random();
                let rho = radius * u.powf(1.0 / d as f64);
                DVector::from_fn(d, |i, _| center[i] + rho * dir[i] / norm.max(f64::MIN_POSITIVE))
            }
            Shape::Simplex { vertices } => {
                let e: Vec<f64> = (0..=d).map(|_| Exp1.sample(&mut self.rng)).collect();
                let total: f64 = e.iter().sum();
                DVector::from_fn(d, |i, _| vertices.iter().zip(&e).map(|(v, w)| v[i] * w / total).sum())
            }
            Shape::Finite { points } => {
                if self.next >= self.order.len() || self.order.len() != points.len() {
                    self.order = (0..points.len()).collect();
                    self.order.shuffle(&mut self.rng);
                    self.next = 0;
                }
                let p = &points[self.order[self.next]];
                self.next += 1;
                DVector::from_column_slice(p)
            }
        }
    }
}
