use std::f64::consts::PI;

use super::legendre::legendre_p_and_derivative;

pub const MAX_ORDER: usize = 4096;

/// Gauss–Legendre rule on `[-1, 1]`, nodes ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }

    /// Nodes and weights affinely mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> QuadratureRule {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        QuadratureRule {
            nodes: self.nodes.iter().map(|x| mid + half * x).collect(),
            weights: self.weights.iter().map(|w| half * w).collect(),
        }
    }

    /// Two-panel rule: this rule mapped onto `[-1, 0]` and `[0, 1]`.
    /// A jump at the origin then sits on a panel boundary.
    pub fn split_at_origin(&self) -> QuadratureRule {
        let mut lower = self.mapped(-1.0, 0.0);
        let upper = self.mapped(0.0, 1.0);
        lower.nodes.extend(upper.nodes);
        lower.weights.extend(upper.weights);
        lower
    }
}

/// Gauss–Legendre rule of the given order, `1 <= order <= 4096`.
///
/// Roots of `P_order` are found by Newton iteration from Tricomi's asymptotic
/// guesses; weights are `2 / ((1 - x^2) P'(x)^2)`.
pub fn gauss_legendre(order: usize) -> QuadratureRule {
    assert!((1..=MAX_ORDER).contains(&order), "quadrature order {order} outside 1..={MAX_ORDER}");
    let n = order as u32;
    let nf = order as f64;
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    for i in 0..order.div_ceil(2) {
        let theta = PI * (i as f64 + 0.75) / (nf + 0.5);
        let mut x = (1.0 - (nf - 1.0) / (8.0 * nf.powi(3))) * theta.cos();
        let mut deriv = 0.0;
        for _ in 0..100 {
            let (p, dp) = legendre_p_and_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            deriv = dp;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_p_and_derivative(n, x);
        if dp.is_finite() {
            deriv = dp;
        }
        let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
        // i-th largest root
        nodes[order - 1 - i] = x;
        weights[order - 1 - i] = w;
        nodes[i] = -x;
        weights[i] = w;
    }
    if order % 2 == 1 {
        nodes[order / 2] = 0.0;
    }
    QuadratureRule { nodes, weights }
}
