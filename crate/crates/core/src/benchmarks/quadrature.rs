use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}

/// `P_k(x)` and `P_k'(x)` by the three-term recurrence.
fn legendre(k: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if k == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=k {
        let j = j as f64;
        let p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
    }
    let kf = k as f64;
    (p1, kf * (x * p1 - p0) / (x * x - 1.0))
}

/// k-point Gauss-Legendre rule on `[a, b]`, nodes ascending.
pub fn gauss_legendre(k: usize, a: f64, b: f64) -> QuadratureRule {
    assert!(k >= 1, "quadrature needs at least one node");
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for i in 0..(k + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(k, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(k, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // x is the i-th largest root; mirror it.
        nodes[k - 1 - i] = mid + half * x;
        nodes[i] = mid - half * x;
        weights[k - 1 - i] = half * w;
        weights[i] = half * w;
    }
    if k % 2 == 1 {
        nodes[k / 2] = mid;
    }
    QuadratureRule { nodes, weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_and_two_points() {
        let r = gauss_legendre(1, 0.0, 1.0);
        assert!((r.nodes[0] - 0.5).abs() < 1e-15 && (r.weights[0] - 1.0).abs() < 1e-15);
        let r = gauss_legendre(2, 0.0, 1.0);
        assert!((r.integrate(|x| x.powi(3)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn exactness_degree() {
        for k in [3, 7, 16] {
            let r = gauss_legendre(k, -1.0, 2.0);
            for d in 0..2 * k {
                let exact = (2f64.powi(d as i32 + 1) - (-1f64).powi(d as i32 + 1)) / (d as f64 + 1.0);
                let got = r.integrate(|x| x.powi(d as i32));
                assert!((got - exact).abs() < 1e-11 * exact.abs().max(1.0), "k={k} d={d}");
            }
        }
    }

    #[test]
    fn nodes_sorted_inside() {
        let r = gauss_legendre(33, 0.0, 1.0);
        assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(r.nodes[0] > 0.0 && r.nodes[32] < 1.0);
        assert!((r.nodes[16] - 0.5).abs() < 1e-15);
    }
}
