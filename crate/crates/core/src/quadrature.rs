//! Composite Gauss-Legendre quadrature for complex-valued integrands.
//!
//! Used only as an independent oracle for the closed-form integrals elsewhere
//! in the crate.

use crate::numeric::ComplexAccumulator;
use crate::C64;

/// Nodes per panel for the oracles.
pub const ORACLE_NODES: usize = 10;

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Rule with `order` nodes on `[-1, 1]`, nodes from Newton iteration on `P_order`.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(order, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrates `f` over `[a, b]` split into `panels` equal panels.
    pub fn integrate<F>(&self, a: f64, b: f64, panels: usize, mut f: F) -> C64
    where
        F: FnMut(f64) -> C64,
    {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut acc = ComplexAccumulator::default();
        for p in 0..panels {
            let lo = a + h * p as f64;
            let mid = lo + 0.5 * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                acc.add(f(mid + 0.5 * h * x) * (0.5 * h * w));
            }
        }
        acc.value()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
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
        for order in 1..=12 {
            let rule = GaussLegendre::new(order);
            let s: f64 = rule.weights().iter().sum();
            assert!((s - 2.0).abs() < 1e-14, "order {order}: {s}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let rule = GaussLegendre::new(5);
        // ∫_0^1 x^9 dx = 1/10
        let v = rule.integrate(0.0, 1.0, 1, |x| C64::new(x.powi(9), 0.0));
        assert!((v.re - 0.1).abs() < 1e-15);
    }

    #[test]
    fn composite_oscillatory_integrand() {
        let rule = GaussLegendre::new(ORACLE_NODES);
        let tau = 2.0 * std::f64::consts::PI;
        let v = rule.integrate(0.0, tau, 16, |t| C64::new(0.0, 3.0 * t).exp());
        assert!(v.norm() < 1e-13);
    }
}
