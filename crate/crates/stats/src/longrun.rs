//! Long-run autocovariance predicted by the resolvent.

use kernel::ResolventTable;
use specfun::gauss_legendre_unit;

use crate::{Error, Result};

/// Dyadic panels resolving the origin power law of the head integral.
const HEAD_PANELS: i32 = 220;

/// Doubling panels available past `u = 1` before giving up.
const TAIL_PANELS: i32 = 44;

/// Long-run autocovariance at lag `s`.
///
/// Evaluates `w v0 + (1 - w) v0 * I(s) / |f|^2` with `w = (a phi_inf)^2`,
/// where `I(s)` is the cross-correlation `integral_0^inf f(s + u) f(u) du`,
/// `a` the kernel's mass deficit and `v0` the starting variance of the fake
/// regime. At `s = 0` the ratio is 1 by definition and `v0` is returned
/// exactly.
pub fn longrun_autocov(table: &ResolventTable, v0: f64, phi_inf: f64, s: f64) -> Result<f64> {
    if !(v0 >= 0.0 && v0.is_finite()) {
        return Err(Error::Domain("starting variance must be finite and >= 0"));
    }
    if !phi_inf.is_finite() {
        return Err(Error::Domain("shift limit must be finite"));
    }
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::Domain("lag must be finite and >= 0"));
    }
    let w = (table.tail_a() * phi_inf).powi(2);
    if s == 0.0 {
        return Ok(v0);
    }
    let l2 = table.f_l2_sq();
    if !(l2 > 0.0) {
        return Err(Error::Domain("autocovariance needs a positive squared norm"));
    }
    let ratio = cross_correlation(table, s)? / l2;
    Ok(v0 * (w + (1.0 - w) * ratio))
}

/// `integral_0^inf f(s + u) f(u) du` for `s > 0`.
///
/// The head `(0, 1]` uses dyadic panels so the origin power law of `f` is
/// resolved exactly as in the covariance assembly; the rest uses doubling
/// panels until two consecutive contributions fall below the accumulated
/// value's precision, which both algebraic and exponential tails reach well
/// inside the panel budget.
fn cross_correlation(table: &ResolventTable, s: f64) -> Result<f64> {
    let gl = gauss_legendre_unit(16);
    let product = |u: f64| -> Result<f64> { Ok(table.f_at(u)? * table.f_at(s + u)?) };

    let mut acc = 0.0;
    for j in 0..HEAD_PANELS {
        let hi = 0.5_f64.powi(j);
        let lo = 0.5 * hi;
        let width = hi - lo;
        let mut panel = 0.0;
        for (w, x) in gl.weights.iter().zip(&gl.nodes) {
            panel += w * product(lo + width * x)?;
        }
        acc += panel * width;
    }

    let mut quiet = 0;
    for j in 0..TAIL_PANELS {
        let lo = 2.0_f64.powi(j);
        let width = lo;
        let mut panel = 0.0;
        for (w, x) in gl.weights.iter().zip(&gl.nodes) {
            panel += w * product(lo + width * x)?;
        }
        acc += panel * width;
        if (panel * width).abs() <= 1e-16 * acc.abs() {
            quiet += 1;
            if quiet >= 2 {
                return Ok(acc);
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::Domain(
        "cross-correlation quadrature did not converge within the panel budget",
    ))
}
