//! One-dimensional quadrature rules.

use std::f64::consts::PI;

use crate::error::{config, Result};

/// Nodes and positive weights of a quadrature rule on an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Integration interval `[a, b]`.
    pub interval: (f64, f64),
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Applies the rule to `f`, summing in node order.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }
}

/// Gauss–Legendre rule with `n` nodes on `[a, b]`, exact for polynomials of
/// degree `2n - 1`.
///
/// Nodes are found by Newton iteration on `P_n` from the Tricomi initial
/// guess; weights follow from `2 / ((1 - x^2) P_n'(x)^2)`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<QuadRule> {
    if n == 0 {
        return config("Gauss-Legendre rule needs at least one node");
    }
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return config(format!("invalid interval [{a}, {b}]"));
    }
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        // one more derivative evaluation at the converged node
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // descending nodes from the right end; store ascending
        nodes[n - 1 - i] = mid + half * x;
        nodes[i] = mid - half * x;
        weights[n - 1 - i] = half * w;
        weights[i] = half * w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = mid;
    }
    Ok(QuadRule {
        nodes,
        weights,
        interval: (a, b),
    })
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence, for |x| < 1.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Trapezoid rule for a periodic integrand on `[0, 2π)` with `n` equal
/// weights; `offset` shifts every node by that fraction of the spacing.
pub fn periodic_trapezoid(n: usize, offset: f64) -> Result<QuadRule> {
    if n == 0 {
        return config("trapezoid rule needs at least one node");
    }
    let h = 2.0 * PI / n as f64;
    Ok(QuadRule {
        nodes: (0..n).map(|i| (i as f64 + offset) * h).collect(),
        weights: vec![h; n],
        interval: (0.0, 2.0 * PI),
    })
}
