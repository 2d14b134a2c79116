//! Memory kernels and their lambda-resolvents.
//!
//! A convolutive Volterra model is driven by a kernel `K` on `(0, inf)`.
//! The central object here is the resolvent pair `(R, f)` attached to a
//! kernel and a mean-reversion speed `lambda`:
//!
//! * `R` solves `R(t) + lambda * (K * R)(t) = 1` with `R(0) = 1`,
//! * `f = -R'` solves `f + lambda * K * f = lambda * K`.
//!
//! `R` decays from 1 to a limit `a` in `[0, 1)` and `f` integrates to
//! `1 - a`. Everything downstream (variance stabilizers, exact simulation
//! weights, long-run covariances) consumes these two functions through
//! [`ResolventTable`], which samples them on a uniform grid and carries the
//! scalar summaries (`tail_a`, `f_l2_sq`) needed by the asymptotic formulas.

mod convolve;
mod resolvent;

pub use convolve::{convolve, PowerLaw};
pub use resolvent::{build_resolvent, check_f_identity, resolvent_residual, ResolventTable};

use specfun::gamma_fn;

/// Errors from kernel construction and resolvent evaluation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter is outside the supported domain.
    #[error("domain error: {0}")]
    Domain(&'static str),
    /// Inputs to a table operation are inconsistent (lengths, grids).
    #[error("shape error: {0}")]
    Shape(&'static str),
    /// An underlying special-function evaluation failed.
    #[error(transparent)]
    Special(#[from] specfun::Error),
}

/// Alias for results in this crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Orders within this distance of 1 are treated as exactly 1, where the
/// power-law kernel degenerates to a constant.
pub(crate) const ALPHA_ONE_EPS: f64 = 1e-6;

/// Parametric family of memory kernels.
///
/// All three weight the past through `K * dX`; they differ in how fast the
/// memory fades and whether it is singular at the origin.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    /// `K(t) = level`. No singularity, exponential resolvent.
    Constant {
        /// Kernel height, must be positive.
        level: f64,
    },
    /// `K(t) = t^(alpha-1) / Gamma(alpha)` for `alpha` in `(1/2, 3/2)`.
    ///
    /// Rough paths for `alpha < 1`, smoother than Brownian for `alpha > 1`.
    Fractional {
        /// Memory order.
        alpha: f64,
    },
    /// `K(t) = b * exp(-rho t) * t^(alpha-1) / Gamma(alpha)`.
    ///
    /// Exponential tilting makes the memory integrable, so the resolvent
    /// levels off at a positive `tail_a` instead of vanishing.
    Gamma {
        /// Overall scale, must be positive.
        b: f64,
        /// Memory order, same range as the fractional kernel.
        alpha: f64,
        /// Tilt rate, must be nonnegative.
        rho: f64,
    },
}

impl KernelSpec {
    /// Validates the parameter ranges.
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Constant { level } => {
                if !(level.is_finite() && level > 0.0) {
                    return Err(Error::Domain("constant kernel needs level > 0"));
                }
            }
            KernelSpec::Fractional { alpha } => {
                if !(alpha.is_finite() && alpha > 0.5 && alpha < 1.5) {
                    return Err(Error::Domain("fractional kernel needs alpha in (1/2, 3/2)"));
                }
            }
            KernelSpec::Gamma { b, alpha, rho } => {
                if !(b.is_finite() && b > 0.0) {
                    return Err(Error::Domain("gamma kernel needs b > 0"));
                }
                if !(alpha.is_finite() && alpha > 0.5 && alpha < 1.5) {
                    return Err(Error::Domain("gamma kernel needs alpha in (1/2, 3/2)"));
                }
                if !(rho.is_finite() && rho >= 0.0) {
                    return Err(Error::Domain("gamma kernel needs rho >= 0"));
                }
            }
        }
        Ok(())
    }

    /// Kernel value at `t`.
    ///
    /// Power-law kernels blow up at the origin for `alpha < 1`, so `t` must
    /// be positive; the constant kernel accepts `t >= 0`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        self.validate()?;
        match *self {
            KernelSpec::Constant { level } => {
                if !(t.is_finite() && t >= 0.0) {
                    return Err(Error::Domain("kernel argument must be >= 0"));
                }
                Ok(level)
            }
            KernelSpec::Fractional { alpha } => {
                if !(t.is_finite() && t > 0.0) {
                    return Err(Error::Domain("kernel argument must be > 0"));
                }
                Ok(t.powf(alpha - 1.0) / gamma_fn(alpha)?)
            }
            KernelSpec::Gamma { b, alpha, rho } => {
                if !(t.is_finite() && t > 0.0) {
                    return Err(Error::Domain("kernel argument must be > 0"));
                }
                Ok(b * (-rho * t).exp() * t.powf(alpha - 1.0) / gamma_fn(alpha)?)
            }
        }
    }

    /// Laplace transform `L_K(s)` for `s > 0`.
    pub fn laplace(&self, s: f64) -> Result<f64> {
        self.validate()?;
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::Domain("laplace argument must be > 0"));
        }
        Ok(match *self {
            KernelSpec::Constant { level } => level / s,
            KernelSpec::Fractional { alpha } => s.powf(-alpha),
            KernelSpec::Gamma { b, alpha, rho } => b * (s + rho).powf(-alpha),
        })
    }

    /// Local power-law behaviour at the origin, `K(u) ~ coeff * u^(exponent-1)`.
    ///
    /// `None` when the kernel is bounded near zero (constant kernel, or a
    /// power-law order indistinguishable from 1).
    pub fn singularity(&self) -> Option<PowerLaw> {
        match *self {
            KernelSpec::Constant { .. } => None,
            KernelSpec::Fractional { alpha } | KernelSpec::Gamma { alpha, .. } => {
                if (alpha - 1.0).abs() < ALPHA_ONE_EPS {
                    return None;
                }
                let b = match *self {
                    KernelSpec::Gamma { b, .. } => b,
                    _ => 1.0,
                };
                // Gamma(alpha) is finite and positive on (1/2, 3/2).
                Some(PowerLaw {
                    exponent: alpha,
                    coeff: b / gamma_fn(alpha).expect("alpha in (1/2,3/2)"),
                })
            }
        }
    }

    /// Folds an overall kernel scale into the speed parameter.
    ///
    /// The resolvent of `(b * K, lambda)` equals the resolvent of
    /// `(K, lambda * b)`, so tables are always built for a unit-scale kernel.
    /// A tilt rate of exactly zero degenerates the gamma kernel into the
    /// fractional one.
    pub fn normalized(&self, lambda: f64) -> (KernelSpec, f64) {
        match *self {
            KernelSpec::Gamma { b, alpha, rho } => {
                if rho == 0.0 {
                    (KernelSpec::Fractional { alpha }, lambda * b)
                } else {
                    (KernelSpec::Gamma { b: 1.0, alpha, rho }, lambda * b)
                }
            }
            ref other => (other.clone(), lambda),
        }
    }
}

/// Uniform time grid `t_k = k * t_max / n` for `k = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_max: f64,
    n: usize,
}

impl TimeGrid {
    /// Builds a grid with `n` steps covering `[0, t_max]`.
    pub fn new(t_max: f64, n: usize) -> Result<Self> {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::Domain("grid horizon must be positive and finite"));
        }
        if n == 0 {
            return Err(Error::Domain("grid needs at least one step"));
        }
        Ok(TimeGrid { t_max, n })
    }

    /// Right endpoint.
    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// Number of steps; the grid holds `n + 1` points.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Step size.
    pub fn dt(&self) -> f64 {
        self.t_max / self.n as f64
    }

    /// `k`-th grid point.
    pub fn point(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    /// Number of stored samples, `n + 1`.
    pub fn len(&self) -> usize {
        self.n + 1
    }

    /// Grids are never empty.
    pub fn is_empty(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_kernel_eval_and_laplace() {
        let k = KernelSpec::Constant { level: 2.5 };
        assert_eq!(k.eval(0.0).unwrap(), 2.5);
        assert_eq!(k.eval(7.0).unwrap(), 2.5);
        assert!((k.laplace(2.0).unwrap() - 1.25).abs() < 1e-15);
        assert!(k.singularity().is_none());
    }

    #[test]
    fn fractional_kernel_matches_power_law() {
        let k = KernelSpec::Fractional { alpha: 0.75 };
        let t: f64 = 0.3;
        let want = t.powf(-0.25) / gamma_fn(0.75).unwrap();
        assert!((k.eval(t).unwrap() - want).abs() < 1e-15 * want);
        let sing = k.singularity().unwrap();
        assert!((sing.exponent - 0.75).abs() < 1e-15);
        assert!((sing.coeff - 1.0 / gamma_fn(0.75).unwrap()).abs() < 1e-15);
        assert!(k.eval(0.0).is_err());
    }

    #[test]
    fn gamma_kernel_tilts_the_fractional_one() {
        let g = KernelSpec::Gamma { b: 2.0, alpha: 0.9, rho: 1.2 };
        let f = KernelSpec::Fractional { alpha: 0.9 };
        let t = 0.7;
        let want = 2.0 * (-1.2_f64 * t).exp() * f.eval(t).unwrap();
        assert!((g.eval(t).unwrap() - want).abs() < 1e-14 * want.abs());
        let lap = g.laplace(1.0).unwrap();
        assert!((lap - 2.0 * 2.2_f64.powf(-0.9)).abs() < 1e-15);
    }

    #[test]
    fn normalization_folds_scale_into_speed() {
        let g = KernelSpec::Gamma { b: 3.0, alpha: 1.1, rho: 0.5 };
        let (unit, lam) = g.normalized(0.4);
        assert_eq!(unit, KernelSpec::Gamma { b: 1.0, alpha: 1.1, rho: 0.5 });
        assert!((lam - 1.2).abs() < 1e-15);

        let g0 = KernelSpec::Gamma { b: 3.0, alpha: 1.1, rho: 0.0 };
        let (unit0, lam0) = g0.normalized(0.4);
        assert_eq!(unit0, KernelSpec::Fractional { alpha: 1.1 });
        assert!((lam0 - 1.2).abs() < 1e-15);
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(KernelSpec::Constant { level: 0.0 }.validate().is_err());
        assert!(KernelSpec::Fractional { alpha: 0.5 }.validate().is_err());
        assert!(KernelSpec::Fractional { alpha: 1.5 }.validate().is_err());
        assert!(KernelSpec::Gamma { b: -1.0, alpha: 0.9, rho: 1.0 }.validate().is_err());
        assert!(KernelSpec::Gamma { b: 1.0, alpha: 0.9, rho: -0.1 }.validate().is_err());
        assert!(KernelSpec::Fractional { alpha: f64::NAN }.validate().is_err());
    }

    #[test]
    fn grid_points_are_uniform() {
        let g = TimeGrid::new(10.0, 2000).unwrap();
        assert_eq!(g.len(), 2001);
        assert!((g.dt() - 0.005).abs() < 1e-18);
        assert!((g.point(2000) - 10.0).abs() < 1e-12);
        assert!(TimeGrid::new(0.0, 5).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }
}
