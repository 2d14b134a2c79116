use crate::{Error, Result, TimeGrid};

/// Local behaviour `f(u) ~ coeff * u^(exponent-1)` near `u = 0`.
///
/// Passed alongside a sampled function whose first grid cell cannot be
/// integrated by a smooth rule. The cell mass `integral_0^dt f` is then taken
/// from the power law exactly: `coeff * dt^exponent / exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    /// Integrability exponent, must be positive.
    pub exponent: f64,
    /// Leading coefficient.
    pub coeff: f64,
}

impl PowerLaw {
    /// Exact mass of the leading power law over `[0, h]`.
    pub fn cell_mass(&self, h: f64) -> f64 {
        self.coeff * h.powf(self.exponent) / self.exponent
    }
}

/// Midpoint-rule convolution `(f * g)(t_k)` on a uniform grid.
///
/// Both inputs are sampled at the grid points; interior midpoint values are
/// taken as two-point averages. When `f` is singular at the origin its first
/// cell is replaced by the exact power-law mass times the local midpoint
/// value of `g`, which keeps the rule second order even for `alpha < 1`
/// kernels. Entry `f[0]` is never read in that case.
///
/// Returns the convolution sampled at all `n + 1` grid points, with value 0
/// at `t = 0`.
pub fn convolve(f: &[f64], f_sing: Option<&PowerLaw>, g: &[f64], grid: &TimeGrid) -> Result<Vec<f64>> {
    let n = grid.n();
    if f.len() != n + 1 || g.len() != n + 1 {
        return Err(Error::Shape("convolution inputs must have n + 1 samples"));
    }
    if let Some(p) = f_sing {
        if !(p.exponent.is_finite() && p.exponent > 0.0) {
            return Err(Error::Domain("power law exponent must be positive"));
        }
        if !p.coeff.is_finite() {
            return Err(Error::Domain("power law coefficient must be finite"));
        }
    }
    let dt = grid.dt();

    // f at cell midpoints (i - 1/2) dt for i = 1..=n; index i-1.
    let f_mid: Vec<f64> = (1..=n).map(|i| 0.5 * (f[i - 1] + f[i])).collect();
    // g at cell midpoints (j + 1/2) dt for j = 0..n; index j.
    let g_mid: Vec<f64> = (0..n).map(|j| 0.5 * (g[j] + g[j + 1])).collect();

    // Mass of f over its first cell; the remaining cells use f_mid * dt.
    let first_cell = match f_sing {
        Some(p) => p.cell_mass(dt),
        None => f_mid[0] * dt,
    };

    let mut out = vec![0.0; n + 1];
    for (k, slot) in out.iter_mut().enumerate().skip(1) {
        // (f * g)(t_k) = sum_j f over cell (k-j) times g at midpoint j.
        let mut acc = 0.0;
        for j in 0..k.saturating_sub(1) {
            acc += f_mid[k - j - 1] * g_mid[j];
        }
        *slot = acc * dt + g_mid[k - 1] * first_cell;
    }
    Ok(out)
}
