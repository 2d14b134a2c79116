//! Gamma and Beta functions.
//!
//! The implementation uses the Lanczos-type rational approximation with
//! shift parameter r = 10.900511 and eleven documented coefficients (Pugh's
//! minimal-error set, widely reproduced in numerics libraries). Relative
//! accuracy is ~1e-14 across the positive axis; the contract promised to
//! callers is 1e-12 on [0.1, 170].

use crate::Error;

/// Shift parameter of the rational approximation.
const GAMMA_R: f64 = 10.900511;

/// Coefficients d_0..d_10 for the r = 10.900511 approximation.
const GAMMA_DK: [f64; 11] = [
    2.485_740_891_387_535_7e-5,
    1.051_423_785_817_219_7,
    -3.456_870_972_220_162_5,
    4.512_277_094_668_948,
    -2.982_852_253_235_766_4,
    1.056_397_115_771_267_1,
    -1.954_287_731_916_458_7e-1,
    1.709_705_434_044_412_2e-2,
    -5.719_261_174_043_057e-4,
    4.633_994_733_599_057e-6,
    -2.719_949_084_886_077_2e-9,
];

/// 2·sqrt(e/pi).
const TWO_SQRT_E_OVER_PI: f64 = 1.860_382_734_205_265_7;

/// Arguments above this overflow f64.
const OVERFLOW_BOUND: f64 = 171.61;

/// Above this the direct product form overflows internally even though the
/// final value is representable; switch to the log-space route.
const LOG_ROUTE_FROM: f64 = 140.0;

fn lanczos_sum(x: f64) -> f64 {
    // sum_k d_k / (x - 1 + k), with the k = 0 term constant
    let mut s = GAMMA_DK[0];
    for (k, dk) in GAMMA_DK.iter().enumerate().skip(1) {
        s += dk / (x - 1.0 + k as f64);
    }
    s
}

fn lanczos_sum_reflected(x: f64) -> f64 {
    // sum_k d_k / (k - x) used by the reflection branch
    let mut s = GAMMA_DK[0];
    for (k, dk) in GAMMA_DK.iter().enumerate().skip(1) {
        s += dk / (k as f64 - x);
    }
    s
}

/// Gamma function on the positive axis.
///
/// Relative error <= 1e-12 for x in [0.1, 170]. Errors: `Domain` for
/// x <= 0 (or NaN), `Overflow` for x > 171.61 where the result exceeds f64.
pub fn gamma_fn(x: f64) -> Result<f64, Error> {
    if !(x > 0.0) {
        return Err(Error::Domain("gamma_fn requires x > 0"));
    }
    if x > OVERFLOW_BOUND {
        return Err(Error::Overflow);
    }
    if x < 0.5 {
        let s = lanczos_sum_reflected(x);
        let core = TWO_SQRT_E_OVER_PI
            * ((0.5 - x + GAMMA_R) / std::f64::consts::E).powf(0.5 - x)
            * s;
        Ok(std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * core))
    } else if x < LOG_ROUTE_FROM {
        let s = lanczos_sum(x);
        Ok(TWO_SQRT_E_OVER_PI
            * ((x - 0.5 + GAMMA_R) / std::f64::consts::E).powf(x - 0.5)
            * s)
    } else {
        // (x-0.5+r)^(x-0.5) alone can overflow before division; assemble in
        // log space where the value itself still fits.
        Ok(ln_gamma(x).exp())
    }
}

/// Natural log of Gamma for x > 0 (internal; no overflow bound).
pub(crate) fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // ln Gamma(x) = ln pi - ln sin(pi x) - ln Gamma(1 - x)
        std::f64::consts::PI.ln()
            - (std::f64::consts::PI * x).sin().ln()
            - ln_gamma(1.0 - x)
    } else {
        TWO_SQRT_E_OVER_PI.ln()
            + (x - 0.5) * ((x - 0.5 + GAMMA_R).ln() - 1.0)
            + lanczos_sum(x).ln()
    }
}

/// sin(pi x) with exact argument reduction, accurate for large |x|.
pub(crate) fn sin_pi(x: f64) -> f64 {
    let m = x.round();
    let r = x - m;
    let s = (std::f64::consts::PI * r).sin();
    if (m as i64) % 2 == 0 {
        s
    } else {
        -s
    }
}

/// 1/Gamma(z) for any real z, zero at the poles z = 0, -1, -2, ...
///
/// Used by asymptotic expansions that need Gamma at negative non-integer
/// arguments; computed by reflection 1/Gamma(z) = sin(pi z) Gamma(1-z) / pi.
pub fn recip_gamma(z: f64) -> f64 {
    if z > 0.5 {
        if z > OVERFLOW_BOUND {
            return 0.0;
        }
        1.0 / gamma_fn(z).expect("positive argument in range")
    } else {
        sin_pi(z) * gamma_fn(1.0 - z).unwrap_or(f64::INFINITY) / std::f64::consts::PI
    }
}

/// Beta function B(a, b) = Gamma(a)Gamma(b)/Gamma(a+b) for a, b > 0.
pub fn beta_fn(a: f64, b: f64) -> Result<f64, Error> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(Error::Domain("beta_fn requires a > 0 and b > 0"));
    }
    if a + b <= OVERFLOW_BOUND {
        Ok(gamma_fn(a)? * gamma_fn(b)? / gamma_fn(a + b)?)
    } else {
        // the ratio stays finite long after the numerator overflows
        Ok((ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp())
    }
}
