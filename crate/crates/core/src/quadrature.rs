//! Composite quadrature on a finite interval.
//!
//! Gauss–Legendre of order `n` is exact for polynomials of degree `2n - 1` on
//! each panel and converges spectrally for smooth integrands; composite Simpson
//! has error `O(h^4)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuadratureRule {
    GaussLegendre {
        order: usize,
        panels: usize,
    },
    /// `panels` Simpson panels, each using three points.
    Simpson {
        panels: usize,
    },
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre order must be at least 1");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess for the i-th largest root
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    let d = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}

/// Points and weights of the composite rule on `[a, b]`.
pub fn composite_nodes(a: f64, b: f64, rule: QuadratureRule) -> Vec<(f64, f64)> {
    match rule {
        QuadratureRule::GaussLegendre { order, panels } => {
            assert!(panels >= 1, "at least one panel");
            let (x, w) = gauss_legendre(order);
            let h = (b - a) / panels as f64;
            let mut out = Vec::with_capacity(order * panels);
            for p in 0..panels {
                let mid = a + (p as f64 + 0.5) * h;
                for (xi, wi) in x.iter().zip(&w) {
                    out.push((mid + 0.5 * h * xi, 0.5 * h * wi));
                }
            }
            out
        }
        QuadratureRule::Simpson { panels } => {
            assert!(panels >= 1, "at least one panel");
            let n = 2 * panels;
            let h = (b - a) / n as f64;
            (0..=n)
                .map(|i| {
                    let c = if i == 0 || i == n {
                        1.0
                    } else if i % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    (a + i as f64 * h, c * h / 3.0)
                })
                .collect()
        }
    }
}

/// `∫_a^b f(x) dx` by the composite rule.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rule: QuadratureRule) -> f64 {
    composite_nodes(a, b, rule)
        .into_iter()
        .map(|(x, w)| w * f(x))
        .sum()
}
