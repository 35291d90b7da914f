//! Gaussian quadrature rules built with the Golub-Welsch eigenvalue method.
//!
//! Rules are normalized as expectation rules: the weights sum to one and
//! `integrate` approximates `E[f(Z)]` for the law the rule was built for.

use nalgebra::{DMatrix, SymmetricEigen};

/// Default node count per integrated-out coordinate.
pub const DEFAULT_NODES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Expectation rule for `Uniform[lo, hi]` (Gauss-Legendre).
    pub fn uniform(n: usize, lo: f64, hi: f64) -> Self {
        // Legendre recurrence: off-diagonal k / sqrt(4k^2 - 1).
        let (x, w) = golub_welsch(n, |k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        });
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        QuadratureRule {
            nodes: x.iter().map(|t| mid + half * t).collect(),
            weights: w,
        }
    }

    /// Expectation rule for `Normal(mean, sd^2)` (probabilists' Gauss-Hermite).
    pub fn normal(n: usize, mean: f64, sd: f64) -> Self {
        let (x, w) = golub_welsch(n, |k| (k as f64).sqrt());
        QuadratureRule {
            nodes: x.iter().map(|t| mean + sd * t).collect(),
            weights: w,
        }
    }

    /// Equal-weight rule over a finite support.
    pub fn discrete(values: &[f64]) -> Self {
        let w = 1.0 / values.len() as f64;
        QuadratureRule {
            nodes: values.to_vec(),
            weights: vec![w; values.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Nodes and normalized weights of the Gauss rule whose monic Jacobi matrix
/// has zero diagonal and off-diagonal entries `offdiag(1..n)`.
fn golub_welsch(n: usize, offdiag: impl Fn(usize) -> f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature needs at least one node");
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = offdiag(k);
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    pairs.into_iter().map(|(x, w)| (x, w / total)).unzip()
}
