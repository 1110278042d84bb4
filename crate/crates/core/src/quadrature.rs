//! Gauss–Legendre rules mapped onto finite intervals.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

#[derive(Debug, Clone)]
pub struct IntervalRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl IntervalRule {
    /// `n`-point rule on `[a, b]`; exact for polynomials of degree `2n − 1`.
    pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Self {
        let n = NonZeroUsize::new(n).expect("at least one node");
        let rule = GaussLegendre::new(n);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let (nodes, weights) = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (mid + half * x, half * w))
            .unzip();
        Self { nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn trig_integrals() {
        let r = IntervalRule::gauss_legendre(32, 0.0, PI);
        assert!((r.integrate(f64::sin) - 2.0).abs() < 1e-14);
        assert!((r.integrate(|x| x.sin().powi(2)) - PI / 2.0).abs() < 1e-14);
        let full = IntervalRule::gauss_legendre(32, 0.0, 2.0 * PI);
        assert!((full.integrate(|x| (x / 2.0).cos().powi(4)) - 0.75 * PI).abs() < 1e-13);
    }

    #[test]
    fn weights_sum_to_length() {
        let r = IntervalRule::gauss_legendre(7, -2.0, 5.0);
        assert!((r.weights.iter().sum::<f64>() - 7.0).abs() < 1e-13);
        assert_eq!(r.len(), 7);
    }
}
