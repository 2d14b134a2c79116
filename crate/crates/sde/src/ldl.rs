//! Square-root-free Cholesky factorization `C = L D L^T` with clamping.
//!
//! The master covariance is positive semidefinite in exact arithmetic but its
//! smallest eigenvalues sit at rounding-noise scale, so tiny negative pivots
//! are expected. Pivots below `-tol` with `tol = 1e-12 * max|C|` indicate a
//! genuinely indefinite input and abort; pivots in `[-tol, 0)` are clamped to
//! zero, counted, and their columns zeroed so the factor stays real.
//!
//! Rows are stored packed. Because the elimination is ordered so that row `i`
//! of the factor depends only on rows `0..=i` of the input, the factor of a
//! leading block equals the leading rows of the full factor bit for bit. The
//! sampler exploits that: one factorization of the full matrix serves every
//! step, which needs only a shrinking leading block.

use crate::{Error, Result};
use crate::cov::SymMatrix;

/// Relative pivot tolerance applied against the largest input entry.
const PIVOT_REL_TOL: f64 = 1e-12;

/// Packed factors `C = L D L^T` plus the pre-scaled rows `L sqrt(D)`.
#[derive(Debug, Clone)]
pub struct GaussianIncrementFactors {
    dim: usize,
    /// Unit lower-triangular rows, packed; row `i` starts at `i (i + 1) / 2`
    /// and ends with the implicit-turned-explicit diagonal 1.
    unit: Vec<f64>,
    diag: Vec<f64>,
    /// Row `i`, entry `j`: `unit[i][j] * sqrt(diag[j])`.
    scaled: Vec<f64>,
    clamped: usize,
}

#[inline]
fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

impl GaussianIncrementFactors {
    /// Factor dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Diagonal of `D`, all entries nonnegative.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Row `i` of the unit lower factor, length `i + 1`, last entry 1.
    pub fn unit_row(&self, i: usize) -> &[f64] {
        &self.unit[row_start(i)..row_start(i) + i + 1]
    }

    /// Row `i` of `L sqrt(D)`, length `i + 1`.
    pub fn scaled_row(&self, i: usize) -> &[f64] {
        &self.scaled[row_start(i)..row_start(i) + i + 1]
    }

    /// Number of pivots clamped from slightly negative to zero.
    pub fn clamped_pivots(&self) -> usize {
        self.clamped
    }

    /// Largest absolute difference between `L D L^T` and `c`.
    pub fn reconstruction_error(&self, c: &SymMatrix) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            let ri = self.unit_row(i);
            for j in 0..=i {
                let rj = self.unit_row(j);
                let mut acc = 0.0;
                for k in 0..=j {
                    acc += ri[k] * rj[k] * self.diag[k];
                }
                worst = worst.max((acc - c.get(i, j)).abs());
            }
        }
        worst
    }
}

/// Factorizes a symmetric matrix, clamping rounding-scale negative pivots.
pub fn ldl_factorize(c: &SymMatrix) -> Result<GaussianIncrementFactors> {
    let dim = c.dim();
    let tolerance = PIVOT_REL_TOL * c.max_abs();
    let mut unit = vec![0.0; row_start(dim)];
    for i in 0..dim {
        for j in 0..=i {
            unit[row_start(i) + j] = c.get(i, j);
        }
    }
    let mut diag = vec![0.0; dim];
    let mut clamped = 0usize;
    let mut column = vec![0.0; dim];

    for j in 0..dim {
        let pivot = unit[row_start(j) + j];
        if pivot < -tolerance {
            return Err(Error::Indefinite {
                pivot,
                index: j,
                tolerance,
            });
        }
        let pivot = if pivot <= 0.0 {
            if pivot < 0.0 {
                clamped += 1;
            }
            0.0
        } else {
            pivot
        };
        diag[j] = pivot;
        unit[row_start(j) + j] = 1.0;

        if pivot == 0.0 {
            for i in (j + 1)..dim {
                unit[row_start(i) + j] = 0.0;
            }
            continue;
        }
        for i in (j + 1)..dim {
            let l = unit[row_start(i) + j] / pivot;
            unit[row_start(i) + j] = l;
            column[i] = l;
        }
        for i in (j + 1)..dim {
            let f = column[i] * pivot;
            if f == 0.0 {
                continue;
            }
            let row = &mut unit[row_start(i)..row_start(i) + i + 1];
            for (k, col) in column[(j + 1)..=i].iter().enumerate() {
                row[j + 1 + k] -= f * col;
            }
        }
    }

    let mut scaled = vec![0.0; row_start(dim)];
    let roots: Vec<f64> = diag.iter().map(|d| d.sqrt()).collect();
    for i in 0..dim {
        for j in 0..=i {
            scaled[row_start(i) + j] = unit[row_start(i) + j] * roots[j];
        }
    }

    Ok(GaussianIncrementFactors {
        dim,
        unit,
        diag,
        scaled,
        clamped,
    })
}
