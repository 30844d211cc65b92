//! Gaussian quadrature: tensor-product Gauss–Legendre rules on uniform
//! hypercubes and Gauss–Hermite rules for the standard normal measure.
//!
//! Nodes and weights come from the Golub–Welsch eigen-decomposition of the
//! Jacobi matrix of the respective orthogonal family.

use nalgebra::DMatrix;
use thiserror::Error;

/// Hard cap on tensor-grid size.
pub const DEFAULT_NODE_BUDGET: usize = 10_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum QuadError {
    #[error("tensor rule would need {requested} nodes, budget is {budget}")]
    DimensionTooLarge { requested: usize, budget: usize },
    #[error("integrand returned a non-finite value at node {0}")]
    NonFiniteValue(usize),
}

/// Eigen-decomposition of a symmetric tridiagonal Jacobi matrix with the
/// given off-diagonal entries. Returns (nodes, squared first eigenvector
/// components), both sorted by node.
fn golub_welsch(offdiag: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let p = offdiag.len() + 1;
    let mut jac = DMatrix::zeros(p, p);
    for (i, &b) in offdiag.iter().enumerate() {
        jac[(i, i + 1)] = b;
        jac[(i + 1, i)] = b;
    }
    let eig = jac.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..p)
        .map(|j| (eig.eigenvalues[j], eig.eigenvectors[(0, j)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Gauss–Legendre nodes and weights on [-1, 1].
fn gauss_legendre_unit(points: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(points >= 1);
    let offdiag: Vec<f64> = (1..points)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    let (nodes, v0) = golub_welsch(&offdiag);
    // mu0 = integral of 1 over [-1, 1]
    let weights = v0.into_iter().map(|w| 2.0 * w).collect();
    (nodes, weights)
}

/// Tensor-product Gauss–Legendre rule on the hypercube `[a, b]^d`.
/// Weights sum to the cube volume `(b - a)^d`.
#[derive(Debug, Clone)]
pub struct TensorGridRule {
    pub dim: usize,
    pub points_per_axis: usize,
    pub a: f64,
    pub b: f64,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl TensorGridRule {
    pub fn gauss_legendre(
        dim: usize,
        points_per_axis: usize,
        a: f64,
        b: f64,
    ) -> Result<Self, QuadError> {
        Self::gauss_legendre_with_budget(dim, points_per_axis, a, b, DEFAULT_NODE_BUDGET)
    }

    pub fn gauss_legendre_with_budget(
        dim: usize,
        points_per_axis: usize,
        a: f64,
        b: f64,
        budget: usize,
    ) -> Result<Self, QuadError> {
        assert!(dim >= 1 && points_per_axis >= 1);
        assert!(a < b, "interval must be nonempty");
        let total = points_per_axis
            .checked_pow(dim as u32)
            .filter(|&t| t <= budget)
            .ok_or(QuadError::DimensionTooLarge {
                requested: points_per_axis.pow(dim.min(9) as u32),
                budget,
            })?;

        let (t, w) = gauss_legendre_unit(points_per_axis);
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let axis_nodes: Vec<f64> = t.iter().map(|&t| mid + half * t).collect();
        let axis_weights: Vec<f64> = w.iter().map(|&w| half * w).collect();

        let mut nodes = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; dim];
        loop {
            nodes.push(idx.iter().map(|&i| axis_nodes[i]).collect());
            weights.push(idx.iter().map(|&i| axis_weights[i]).product());
            // odometer increment over the index lattice
            let mut axis = 0;
            loop {
                if axis == dim {
                    return Ok(Self { dim, points_per_axis, a, b, nodes, weights });
                }
                idx[axis] += 1;
                if idx[axis] < points_per_axis {
                    break;
                }
                idx[axis] = 0;
                axis += 1;
            }
        }
    }

    pub fn volume(&self) -> f64 {
        (self.b - self.a).powi(self.dim as i32)
    }

    /// Uniform-measure mean of `h` over the cube: quadrature sum divided
    /// by the cube volume.
    pub fn integrate_mean<F: FnMut(&[f64]) -> f64>(&self, mut h: F) -> Result<f64, QuadError> {
        let mut acc = 0.0;
        for (i, (node, w)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let v = h(node);
            if !v.is_finite() {
                return Err(QuadError::NonFiniteValue(i));
            }
            acc += w * v;
        }
        Ok(acc / self.volume())
    }

    /// Uniform-measure mean and variance of `h` in a single pass. The
    /// variance is clamped at zero.
    pub fn mean_and_variance<F: FnMut(&[f64]) -> f64>(
        &self,
        mut h: F,
    ) -> Result<(f64, f64), QuadError> {
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for (i, (node, w)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let v = h(node);
            if !v.is_finite() {
                return Err(QuadError::NonFiniteValue(i));
            }
            s1 += w * v;
            s2 += w * v * v;
        }
        let vol = self.volume();
        let mean = s1 / vol;
        Ok((mean, (s2 / vol - mean * mean).max(0.0)))
    }
}

/// Gauss–Hermite rule in the probabilists' convention: weights sum to 1
/// and the rule integrates against the standard normal density.
#[derive(Debug, Clone)]
pub struct GaussHermiteRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermiteRule {
    pub fn new(points: usize) -> Self {
        assert!(points >= 1);
        let offdiag: Vec<f64> = (1..points).map(|k| (k as f64).sqrt()).collect();
        let (nodes, weights) = golub_welsch(&offdiag);
        Self { nodes, weights }
    }

    /// Expectation of `h(zeta)` under the standard normal measure.
    pub fn expect<F: FnMut(f64) -> f64>(&self, mut h: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * h(x)).sum()
    }
}
