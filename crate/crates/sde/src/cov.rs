//! Master covariance of the Gaussian vector driving one time step.
//!
//! The sampler consumes, for each step, the joint law of the Brownian
//! increment `dW` over a cell together with the kernel-weighted increments
//! `I_i = integral_cell f(u + i dt) dW(u)` for every forward offset `i`. On a
//! uniform grid that law is stationary across steps, so a single symmetric
//! matrix of size `(n + 1) x (n + 1)` covers the whole simulation:
//!
//! - `C[0][0] = dt`,
//! - `C[0][1 + i] = integral_0^dt f(u + i dt) du`,
//! - `C[1 + i][1 + j] = dt * integral_0^1 f(dt (i + v)) f(dt (j + v)) dv`.
//!
//! Every smooth cell is integrated with a shared 16-point Gauss-Legendre
//! template, which makes the whole matrix a Gram matrix of the sampled rows
//! `(1, f(dt (i + v_q)))` under the common weights and hence positive
//! semidefinite up to rounding. When `f` carries a power-law factor at the
//! origin the offset-zero entries are recomputed by peeling the local series
//! `f(t) = sum_m s_m t^(alpha - 1 + alpha m) e^(-rho t)` and applying a
//! Gauss-Jacobi rule per term, which restores machine accuracy there without
//! breaking semidefiniteness beyond the factorization's clamping tolerance.

use kernel::{KernelSpec, ResolventTable, TimeGrid};
use specfun::{gauss_jacobi_unit, gauss_legendre_unit, recip_gamma, QuadratureRule};

use crate::{Error, Result};

/// Dense symmetric matrix in row-major storage with mirrored writes.
#[derive(Debug, Clone)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Zero matrix of the given dimension.
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry at `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Writes `(i, j)` and its mirror `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.dim + j] = value;
        self.data[j * self.dim + i] = value;
    }

    /// Largest absolute entry; 0 for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Number of shared Gauss-Legendre nodes per cell.
const GRAM_NODES: usize = 16;

/// Relative cutoff for the origin-cell series peel.
const PEEL_TOL: f64 = 1e-18;

/// Hard cap on peeled terms before reporting non-convergence.
const PEEL_MAX_TERMS: usize = 96;

/// Assembles the per-step master covariance on `grid`.
///
/// `table` must have been built on the same grid. The returned matrix is
/// symmetric, positive semidefinite up to rounding noise a factorization can
/// clamp, and entrywise accurate to near machine precision.
pub fn assemble_covariance(table: &ResolventTable, grid: &TimeGrid) -> Result<SymMatrix> {
    if table.grid() != grid {
        return Err(Error::Mismatch(
            "resolvent table was built on a different grid",
        ));
    }
    let n = grid.n();
    let dt = grid.dt();
    let dim = n + 1;
    let mut c = SymMatrix::zeros(dim);
    c.set(0, 0, dt);

    let gl = gauss_legendre_unit(GRAM_NODES);
    let singular = table.f_singularity();
    // Offset zero joins the Gram block only when f is analytic there.
    let start = if singular.is_some() { 1 } else { 0 };

    // f at the shared nodes of every cell; row i holds offset i.
    let mut samples = vec![0.0; n * GRAM_NODES];
    for i in start..n {
        for (q, x) in gl.nodes.iter().enumerate() {
            samples[i * GRAM_NODES + q] = table.f_at(dt * (i as f64 + x))?;
        }
    }

    for i in start..n {
        let row_i = &samples[i * GRAM_NODES..(i + 1) * GRAM_NODES];
        let border: f64 = gl
            .weights
            .iter()
            .zip(row_i)
            .map(|(w, f)| w * f)
            .sum();
        c.set(0, 1 + i, dt * border);
        for j in start..=i {
            let row_j = &samples[j * GRAM_NODES..(j + 1) * GRAM_NODES];
            let mut acc = 0.0;
            for q in 0..GRAM_NODES {
                acc += gl.weights[q] * row_i[q] * row_j[q];
            }
            c.set(1 + i, 1 + j, dt * acc);
        }
    }

    if singular.is_some() {
        fill_origin_cell(table, grid, &mut c)?;
    }
    Ok(c)
}

/// Recomputes the entries touching the origin cell by series peeling.
///
/// Writes `C[0][1]`, `C[1][1]` and `C[1][1 + j]` for `j = 1..n`. The local
/// expansion `f(t) = e^(-rho t) sum_m s_m t^(alpha - 1 + alpha m)` with
/// `s_m = lam (-lam)^m / Gamma(alpha (m + 1))` converges superexponentially,
/// and each power-law factor is absorbed into a Gauss-Jacobi weight so only
/// analytic integrands reach the quadrature.
fn fill_origin_cell(table: &ResolventTable, grid: &TimeGrid, c: &mut SymMatrix) -> Result<()> {
    let n = grid.n();
    let dt = grid.dt();
    let lam = table.lambda();
    let (alpha, rho) = match *table.spec() {
        KernelSpec::Fractional { alpha } => (alpha, 0.0),
        KernelSpec::Gamma { alpha, rho, .. } => (alpha, rho),
        KernelSpec::Constant { .. } => {
            return Err(Error::Domain("flat kernel carries no origin singularity"))
        }
    };

    // Series coefficients of the power part, truncated when a term can no
    // longer move the first-cell integrals at the working precision.
    let mut coefs = Vec::new();
    let head = lam * recip_gamma(alpha);
    loop {
        let m = coefs.len();
        let s = lam * (-lam).powi(m as i32) * recip_gamma(alpha * (m as f64 + 1.0));
        coefs.push(s);
        if m >= 2 && (s * dt.powf(alpha * m as f64)).abs() <= PEEL_TOL * head.abs() {
            break;
        }
        if m + 1 >= PEEL_MAX_TERMS {
            return Err(Error::Quadrature(
                "origin-cell series for the covariance did not converge",
            ));
        }
    }

    // One Jacobi rule per peeled exponent; `gamma > -1` holds because the
    // kernel order exceeds one half.
    let rules: Vec<QuadratureRule> = coefs
        .iter()
        .enumerate()
        .map(|(m, _)| gauss_jacobi_unit(GRAM_NODES, alpha - 1.0 + alpha * m as f64))
        .collect::<std::result::Result<_, _>>()?;

    // Border: integral of f over the origin cell.
    let mut border = 0.0;
    for (m, (s, rule)) in coefs.iter().zip(&rules).enumerate() {
        let damped: f64 = rule
            .weights
            .iter()
            .zip(&rule.nodes)
            .map(|(w, x)| w * (-rho * dt * x).exp())
            .sum();
        border += s * dt.powf(alpha + alpha * m as f64) * damped;
    }
    c.set(0, 1, border);

    // Mixed entries against every later cell.
    for j in 1..n {
        let mut acc = 0.0;
        for (m, (s, rule)) in coefs.iter().zip(&rules).enumerate() {
            let mut inner = 0.0;
            for (w, x) in rule.weights.iter().zip(&rule.nodes) {
                inner += w * (-rho * dt * x).exp() * table.f_at(dt * (j as f64 + x))?;
            }
            acc += s * dt.powf(alpha - 1.0 + alpha * m as f64) * inner;
        }
        c.set(1, 1 + j, dt * acc);
    }

    // Diagonal entry: the squared series is peeled the same way with the
    // Cauchy-product coefficients and a doubled damping rate.
    let head_sq = coefs[0] * coefs[0];
    let mut acc = 0.0;
    for m in 0..(2 * coefs.len() - 1) {
        let lo = (m + 1).saturating_sub(coefs.len());
        let sigma: f64 = (lo..=m.min(coefs.len() - 1))
            .map(|i| coefs[i] * coefs[m - i])
            .sum();
        let scale = sigma * dt.powf(2.0 * alpha - 2.0 + alpha * m as f64);
        if m >= 2 && scale.abs() <= PEEL_TOL * (head_sq.abs() * dt.powf(2.0 * alpha - 2.0)) {
            break;
        }
        let rule = gauss_jacobi_unit(GRAM_NODES, 2.0 * alpha - 2.0 + alpha * m as f64)?;
        let damped: f64 = rule
            .weights
            .iter()
            .zip(&rule.nodes)
            .map(|(w, x)| w * (-2.0 * rho * dt * x).exp())
            .sum();
        acc += scale * damped;
    }
    c.set(1, 1, dt * acc);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use kernel::build_resolvent;

    #[test]
    fn storage_mirrors_writes() {
        let mut m = SymMatrix::zeros(3);
        m.set(2, 0, 1.5);
        assert_eq!(m.get(0, 2), 1.5);
        assert_eq!(m.get(2, 0), 1.5);
        assert_eq!(m.max_abs(), 1.5);
    }

    #[test]
    fn flat_kernel_corner_and_border() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let lambda = 0.7;
        let table = build_resolvent(&KernelSpec::Constant { level: 1.0 }, lambda, &grid).unwrap();
        let c = assemble_covariance(&table, &grid).unwrap();
        let dt = grid.dt();
        assert_eq!(c.get(0, 0), dt);
        // integral of lambda e^(-lambda u) over cell i.
        for i in 0..10 {
            let exact = (-lambda * dt * i as f64).exp() - (-lambda * dt * (i as f64 + 1.0)).exp();
            let got = c.get(0, 1 + i);
            assert!((got - exact).abs() <= 1e-12 * exact.abs());
        }
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let other = TimeGrid::new(1.0, 11).unwrap();
        let table = build_resolvent(&KernelSpec::Constant { level: 1.0 }, 0.5, &grid).unwrap();
        assert!(matches!(
            assemble_covariance(&table, &other),
            Err(Error::Mismatch(_))
        ));
    }
}
