//! Resolvent densities.
//!
//! f_{alpha,lambda} is the density whose integral 1 - e_alpha-type resolvent
//! loses over time: it solves f + lambda K * f = lambda K for the power
//! kernel K(t) = t^{alpha-1}/Gamma(alpha) and equals
//!
//!   f_{alpha,lambda}(t) = lambda t^{alpha-1} sum_k (-lambda t^alpha)^k
//!                         / Gamma(alpha(k+1)),
//!
//! with the scaling law f_{alpha,lambda}(t) = lambda^{1/alpha}
//! f_{alpha,1}(lambda^{1/alpha} t). For the exponentially tilted kernel
//! the density just picks up the same tilt: e^{-rho t} f_{alpha,lambda}(t).
//!
//! Small arguments use the series; large arguments use the Laplace-integral
//! route (the same engine as the Mittag-Leffler representation) plus, for
//! alpha > 1, a damped-cosine pole term whose phase is shifted by +pi/alpha
//! relative to the e_alpha wave (one derivative rotates the pole phase by
//! pi/alpha).

use crate::ml::laplace_q_engine;
use crate::quad::GL16;
use crate::Error;
use std::f64::consts::PI;

const SERIES_SWITCH: f64 = 5.0; // on lambda t^alpha

fn check_domain(alpha: f64, lambda: f64, t: f64) -> Result<(), Error> {
    if !(alpha > 0.5 && alpha < 1.5) {
        return Err(Error::Domain("f_fractional requires alpha in (1/2, 3/2)"));
    }
    if !(lambda > 0.0) {
        return Err(Error::Domain("f_fractional requires lambda > 0"));
    }
    if !(t > 0.0) {
        return Err(Error::Domain("f_fractional requires t > 0"));
    }
    Ok(())
}

/// Density of the mean-reversion kernel for the power-law memory
/// K(t) = t^{alpha-1}/Gamma(alpha), alpha in (1/2, 3/2), lambda > 0, t > 0.
///
/// Nonnegative for alpha <= 1; changes sign beyond the first wave zero for
/// alpha > 1. Integrates to 1 over (0, inf).
pub fn f_fractional(alpha: f64, lambda: f64, t: f64) -> Result<f64, Error> {
    check_domain(alpha, lambda, t)?;
    if (alpha - 1.0).abs() < 1e-6 {
        return Ok(lambda * (-lambda * t).exp());
    }
    let x = lambda * t.powf(alpha);
    if series_usable(alpha, x) {
        Ok(t.powf(alpha - 1.0) * smooth_series(alpha, x)? * lambda)
    } else {
        f_engine_route(alpha, lambda, t)
    }
}

/// The alternating series cancels against an e^{x^(1/alpha)} envelope;
/// restrict it to where that costs at most a few digits.
fn series_usable(alpha: f64, x: f64) -> bool {
    x <= SERIES_SWITCH && x.powf(1.0 / alpha) <= 9.0
}

/// f_{alpha,lambda}(t) / (lambda t^{alpha-1}): the entire-function factor
/// sum_k (-x)^k / Gamma(alpha(k+1)) at x = lambda t^alpha.
fn smooth_series(alpha: f64, x: f64) -> Result<f64, Error> {
    let mut sum = 0.0_f64;
    let mut xp = 1.0_f64;
    let mut sign = 1.0_f64;
    let mut prev = f64::INFINITY;
    for k in 0..400 {
        let g = crate::gamma::gamma_fn(alpha * (k as f64 + 1.0))?;
        let term = sign * xp / g;
        sum += term;
        let mag = term.abs();
        if mag < 1e-17 && mag <= prev && k >= 3 {
            return Ok(sum);
        }
        prev = mag;
        sign = -sign;
        xp *= x;
    }
    Err(Error::NonConvergence)
}

/// Large-argument route: Laplace integral of u H_alpha(u) plus (alpha > 1)
/// the phase-shifted pole wave.
pub(crate) fn f_engine_route(alpha: f64, lambda: f64, t: f64) -> Result<f64, Error> {
    let tau = lambda.powf(1.0 / alpha);
    let big_t = tau * t;
    let (integral, _) = laplace_q_engine(alpha, alpha, big_t, &GL16, None);
    let mut v = (PI * alpha).sin() / PI * big_t.powf(-alpha - 1.0) * integral;
    if alpha > 1.0 {
        let ang = PI / alpha;
        v -= 2.0 / alpha
            * (big_t * ang.cos()).exp()
            * (big_t * ang.sin() + ang).cos();
    }
    Ok(tau * v)
}

/// Smooth factor S(t) = f_{alpha,lambda}(t) / t^{alpha-1}, finite and
/// analytic at t = 0 with S(0) = lambda / Gamma(alpha). Defined for t >= 0.
pub fn f_smooth_factor(alpha: f64, lambda: f64, t: f64) -> Result<f64, Error> {
    if !(t >= 0.0) {
        return Err(Error::Domain("f_smooth_factor requires t >= 0"));
    }
    if t > 0.0 {
        check_domain(alpha, lambda, t)?;
    } else {
        check_domain(alpha, lambda, 1.0)?;
    }
    if (alpha - 1.0).abs() < 1e-6 {
        return Ok(lambda * (-lambda * t).exp());
    }
    let x = lambda * t.powf(alpha);
    if series_usable(alpha, x) {
        Ok(lambda * smooth_series(alpha, x)?)
    } else {
        Ok(f_fractional(alpha, lambda, t)? / t.powf(alpha - 1.0))
    }
}

/// Density for the exponentially tilted kernel
/// K(t) = e^{-rho t} t^{alpha-1}/Gamma(alpha):
/// f(t) = e^{-rho t} f_{alpha,lambda}(t). rho = 0 reduces to `f_fractional`.
pub fn f_gamma(alpha: f64, rho: f64, lambda: f64, t: f64) -> Result<f64, Error> {
    if !(rho >= 0.0) {
        return Err(Error::Domain("f_gamma requires rho >= 0"));
    }
    Ok((-rho * t).exp() * f_fractional(alpha, lambda, t)?)
}
