//! Gauss quadrature rules.
//!
//! Nodes and weights come from the Golub-Welsch eigenvalue method: the
//! three-term recurrence of the orthogonal polynomial family is packed into
//! a symmetric tridiagonal (Jacobi) matrix whose eigenvalues are the nodes;
//! the weight of node i is mu0 times the squared first component of the
//! corresponding normalized eigenvector.

use crate::gamma::gamma_fn;
use crate::Error;
use nalgebra::DMatrix;
use once_cell::sync::Lazy;

/// Which quadrature family a rule belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadKind {
    /// Generalized Gauss-Laguerre on [0, inf) with weight y^p e^{-y}.
    GaussLaguerre,
    /// Fixed-order Gauss-Legendre base rule applied on adaptively chosen
    /// panels (the default integration engine).
    GaussLegendreComposite,
}

/// A quadrature rule: paired nodes and weights plus the family tag.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub kind: QuadKind,
    /// Nodes, strictly increasing.
    pub nodes: Vec<f64>,
    /// Weights, all positive.
    pub weights: Vec<f64>,
    /// Exponent p of the absorbed weight factor (y^p for Laguerre,
    /// 0 for Legendre panels).
    pub exponent: f64,
}

/// Run Golub-Welsch on recurrence diagonal `diag`, off-diagonal squares
/// `offdiag_sq` (length n-1), and zeroth moment `mu0`.
fn golub_welsch(diag: &[f64], offdiag_sq: &[f64], mu0: f64) -> (Vec<f64>, Vec<f64>) {
    let n = diag.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = diag[i];
    }
    for i in 0..n - 1 {
        let b = offdiag_sq[i].sqrt();
        m[(i, i + 1)] = b;
        m[(i + 1, i)] = b;
    }
    let eig = m.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let node = eig.eigenvalues[j];
            let w = mu0 * eig.eigenvectors[(0, j)].powi(2);
            (node, w)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    (
        pairs.iter().map(|p| p.0).collect(),
        pairs.iter().map(|p| p.1).collect(),
    )
}

/// n-point Gauss-Legendre rule on [0, 1].
pub fn gauss_legendre_unit(n: usize) -> QuadratureRule {
    // Legendre on [-1,1]: a_k = 0, b_k^2 = k^2/(4k^2-1), mu0 = 2,
    // then map x -> (1+x)/2.
    let diag = vec![0.0; n];
    let offdiag_sq: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            k * k / (4.0 * k * k - 1.0)
        })
        .collect();
    let (nodes, weights) = golub_welsch(&diag, &offdiag_sq, 2.0);
    QuadratureRule {
        kind: QuadKind::GaussLegendreComposite,
        nodes: nodes.iter().map(|x| 0.5 * (1.0 + x)).collect(),
        weights: weights.iter().map(|w| 0.5 * w).collect(),
        exponent: 0.0,
    }
}

/// n-point generalized Gauss-Laguerre rule for integrals
/// int_0^inf g(y) y^p e^{-y} dy ~= sum_i w_i g(nodes_i).
///
/// The weight factor y^p e^{-y} is absorbed into the weights.
pub fn gauss_laguerre(n: usize, p: f64) -> Result<QuadratureRule, Error> {
    if !(p > -1.0) {
        return Err(Error::Domain("gauss_laguerre requires exponent > -1"));
    }
    // Laguerre(p): a_k = 2k + p + 1, b_k^2 = k(k+p), mu0 = Gamma(p+1)
    let diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + p + 1.0).collect();
    let offdiag_sq: Vec<f64> = (1..n).map(|k| k as f64 * (k as f64 + p)).collect();
    let mu0 = gamma_fn(p + 1.0)?;
    let (nodes, weights) = golub_welsch(&diag, &offdiag_sq, mu0);
    Ok(QuadratureRule {
        kind: QuadKind::GaussLaguerre,
        nodes,
        weights,
        exponent: p,
    })
}

/// n-point Gauss-Jacobi rule on [0, 1] for integrals
/// int_0^1 g(x) x^g dx with the x^gamma factor absorbed into the weights.
///
/// Valid for gamma > -1; gamma = 0 reproduces Gauss-Legendre.
pub fn gauss_jacobi_unit(n: usize, gamma: f64) -> Result<QuadratureRule, Error> {
    if !(gamma > -1.0) {
        return Err(Error::Domain("gauss_jacobi_unit requires exponent > -1"));
    }
    // Jacobi weight (1-x)^0 (1+x)^gamma on [-1,1]; recurrence written so the
    // k = 0 diagonal entry avoids the 0/0 ambiguity at gamma = 0.
    let diag: Vec<f64> = (0..n)
        .map(|k| {
            if k == 0 {
                gamma / (gamma + 2.0)
            } else {
                let k = k as f64;
                let d = 2.0 * k + gamma;
                gamma * gamma / (d * (d + 2.0))
            }
        })
        .collect();
    let offdiag_sq: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            let d = 2.0 * k + gamma;
            4.0 * k * k * (k + gamma) * (k + gamma) / (d * d * (d + 1.0) * (d - 1.0))
        })
        .collect();
    let mu0 = 2f64.powf(gamma + 1.0) / (gamma + 1.0);
    let (nodes, weights) = golub_welsch(&diag, &offdiag_sq, mu0);
    // map [-1,1] with weight (1+x)^gamma onto [0,1] with weight x^gamma:
    // x01 = (1+x)/2, w01 = w * 2^{-(gamma+1)}
    let scale = 2f64.powf(-gamma - 1.0);
    Ok(QuadratureRule {
        kind: QuadKind::GaussLegendreComposite,
        nodes: nodes.iter().map(|x| 0.5 * (1.0 + x)).collect(),
        weights: weights.iter().map(|w| scale * w).collect(),
        exponent: gamma,
    })
}

/// Shared 16-point Legendre base rule for panel integration.
pub(crate) static GL16: Lazy<QuadratureRule> = Lazy::new(|| gauss_legendre_unit(16));
/// Embedded lower-order rule used for accuracy estimates.
pub(crate) static GL8: Lazy<QuadratureRule> = Lazy::new(|| gauss_legendre_unit(8));

/// Default composite rule handle (16-point Legendre panels).
pub fn composite_default() -> QuadratureRule {
    GL16.clone()
}
