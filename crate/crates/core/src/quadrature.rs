//! Fixed-order Gauss–Legendre rules.

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// The `n`-point rule on `[−1, 1]`, nodes by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    pub fn integrate_complex(&self, f: impl Fn(f64) -> Complex64, a: f64, b: f64) -> Complex64 {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let mut acc = Complex64::new(0.0, 0.0);
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in 1..=32 {
            let g = GaussLegendre::new(n);
            let s: f64 = g.weights().iter().sum();
            assert!((s - 2.0).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let g = GaussLegendre::new(16);
        for d in 0..32 {
            let got = g.integrate(|x| x.powi(d), 0.0, 1.0);
            assert!((got - 1.0 / (d as f64 + 1.0)).abs() < 1e-14, "d={d}");
        }
    }

    #[test]
    fn nodes_are_sorted_and_inside() {
        let g = GaussLegendre::new(15);
        assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
        assert!(g.nodes().iter().all(|x| x.abs() < 1.0));
        assert!(g.nodes()[7].abs() < 1e-15);
    }

    #[test]
    fn complex_rule_matches_real_parts() {
        let g = GaussLegendre::new(12);
        let z = g.integrate_complex(|x| Complex64::new(x.cos(), x.sin()), 0.0, 2.0);
        assert!((z.re - 2f64.sin()).abs() < 1e-14);
        assert!((z.im - (1.0 - 2f64.cos())).abs() < 1e-14);
    }
}
