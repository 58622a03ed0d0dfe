//! Gauss–Hermite rules for Gaussian-weighted averages.

use nalgebra::DMatrix;

use crate::error::{precondition, Result};

/// Nodes `x_i` and weights `w_i` with `∫ e^{-x²} f(x) dx ≈ Σ w_i f(x_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Golub–Welsch: nodes are the eigenvalues of the symmetric Jacobi
    /// matrix with off-diagonal `sqrt(k/2)`.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return precondition("Gauss-Hermite rule needs at least one node");
        }
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let b = (k as f64 / 2.0).sqrt();
            jacobi[(k - 1, k)] = b;
            jacobi[(k, k - 1)] = b;
        }
        let eig = jacobi.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], std::f64::consts::PI.sqrt() * v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        })
    }

    /// `E[f(X)]` for `X ~ N(0, σ²)`.
    pub fn normal_expectation(&self, sigma: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let scale = std::f64::consts::SQRT_2 * sigma;
        let norm = std::f64::consts::PI.sqrt();
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(scale * x)).sum::<f64>() / norm
    }

    /// Points `σ√2 x_i` at which [`normal_expectation`](Self::normal_expectation)
    /// samples, paired with probability weights summing to one.
    pub fn normal_points(&self, sigma: f64) -> Vec<(f64, f64)> {
        let scale = std::f64::consts::SQRT_2 * sigma;
        let norm = std::f64::consts::PI.sqrt();
        self.nodes.iter().zip(&self.weights).map(|(x, w)| (scale * x, w / norm)).collect()
    }
}
