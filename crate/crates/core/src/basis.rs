//! Gauss-Legendre collocation on the unit interval.
//!
//! Everything multi-dimensional is built from these 1-D operators applied
//! along one axis at a time.

use nalgebra::DMatrix;
use thiserror::Error;

pub const MAX_ORDER: usize = 9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("polynomial order {0} outside the supported range 0..={MAX_ORDER}")]
    OrderOutOfRange(usize),
}

/// Lagrange basis on the `p + 1` Gauss-Legendre points of `(0, 1)`.
#[derive(Debug, Clone)]
pub struct Basis1D {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `diff[i * n + j] = phi_j'(x_i)`
    diff: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
    barycentric: Vec<f64>,
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule mapped to `(0, 1)`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-like initial guess for the i-th root, descending in [-1, 1]
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-15 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        // reverse so nodes ascend
        nodes[n - 1 - i] = 0.5 * (x + 1.0);
        weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    // enforce exact symmetry about 1/2
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let a = 0.5 * (nodes[i] + (1.0 - nodes[j]));
        nodes[i] = a;
        nodes[j] = 1.0 - a;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.5;
    }
    (nodes, weights)
}

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

impl Basis1D {
    pub fn new(order: usize) -> Result<Self, BasisError> {
        if order > MAX_ORDER {
            return Err(BasisError::OrderOutOfRange(order));
        }
        let n = order + 1;
        let (nodes, weights) = gauss_legendre(n);
        let barycentric: Vec<f64> = (0..n)
            .map(|j| {
                let prod: f64 = (0..n).filter(|&k| k != j).map(|k| nodes[j] - nodes[k]).product();
                1.0 / prod
            })
            .collect();
        let mut diff = vec![0.0; n * n];
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i != j {
                    let v = barycentric[j] / barycentric[i] / (nodes[i] - nodes[j]);
                    diff[i * n + j] = v;
                    diag -= v;
                }
            }
            diff[i * n + i] = diag;
        }
        let mut basis = Self {
            order,
            nodes,
            weights,
            diff,
            left: Vec::new(),
            right: Vec::new(),
            barycentric,
        };
        basis.left = basis.evaluate_all(0.0);
        basis.right = basis.evaluate_all(1.0);
        Ok(basis)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.order + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Row-major `(p+1) x (p+1)` matrix with entry `[i][j] = phi_j'(x_i)`.
    pub fn derivative_matrix(&self) -> &[f64] {
        &self.diff
    }

    /// Values of every basis function at `x = 0` and `x = 1`.
    pub fn extrapolation_vectors(&self) -> (&[f64], &[f64]) {
        (&self.left, &self.right)
    }

    /// Weights that collapse a function sampled at the time nodes onto its
    /// integral over the unit time interval. Multiply by the time step
    /// downstream.
    pub fn time_collapse_weights(&self) -> &[f64] {
        &self.weights
    }

    /// `phi_j(x)` for all `j`.
    pub fn evaluate_all(&self, x: f64) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|j| {
                (0..n)
                    .filter(|&k| k != j)
                    .map(|k| (x - self.nodes[k]) / (self.nodes[j] - self.nodes[k]))
                    .product()
            })
            .collect()
    }

    /// Evaluates the interpolant with nodal values `coeffs` at `x`.
    pub fn interpolate(&self, coeffs: &[f64], x: f64) -> f64 {
        self.evaluate_all(x).iter().zip(coeffs).map(|(a, b)| a * b).sum()
    }

    /// Applies the differentiation matrix to nodal values.
    pub fn differentiate(&self, coeffs: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| (0..n).map(|j| self.diff[i * n + j] * coeffs[j]).sum())
            .collect()
    }

    /// Integral of `f` over `(a, b)` with this rule.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let w = b - a;
        self.nodes.iter().zip(&self.weights).map(|(x, wi)| wi * f(a + w * x)).sum::<f64>() * w
    }

    #[doc(hidden)]
    pub fn barycentric_weights(&self) -> &[f64] {
        &self.barycentric
    }

    /// Picard iteration matrix of the time-direction weak form with the
    /// initial value entering upwind at `t = 0`: returns `(K^-1, K^-1 l)`
    /// where `K[k][l] = phi_k(1) phi_l(1) - w_l phi_k'(t_l)` and `l` holds
    /// `phi_k(0)`.
    pub fn time_iteration_operator(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let k = DMatrix::from_fn(n, n, |row, col| {
            self.right[row] * self.right[col] - self.weights[col] * self.diff[col * n + row]
        });
        let inv = k.try_inverse().expect("time stiffness matrix is regular");
        let mut inv_flat = vec![0.0; n * n];
        let mut init = vec![0.0; n];
        for r in 0..n {
            for c in 0..n {
                inv_flat[r * n + c] = inv[(r, c)];
                init[r] += inv[(r, c)] * self.left[c];
            }
        }
        (inv_flat, init)
    }
}
