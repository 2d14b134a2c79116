//! Special functions for convolutive Volterra models.
//!
//! The crate provides the Gamma and Beta functions, the Mittag-Leffler
//! function with its split integral-plus-wave representation, the resolvent
//! densities of power-law and exponentially tilted memory kernels, and the
//! Gauss quadrature rules (Legendre, generalized Laguerre, Jacobi) that the
//! integral representations are built on.

mod fderiv;
mod gamma;
mod ml;
mod quad;

pub use fderiv::{f_fractional, f_gamma, f_smooth_factor};
pub use gamma::{beta_fn, gamma_fn, recip_gamma};
pub use ml::{e_alpha, e_alpha_repr, e_alpha_repr_general, h_alpha, mittag_leffler, MLRegime};
pub use quad::{
    composite_default, gauss_jacobi_unit, gauss_laguerre, gauss_legendre_unit, QuadKind,
    QuadratureRule,
};

/// Errors shared by all special-function routines.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// Argument outside the supported domain.
    #[error("domain error: {0}")]
    Domain(&'static str),
    /// Result exceeds f64 range.
    #[error("overflow: result exceeds f64 range")]
    Overflow,
    /// Series failed to converge within its term cap.
    #[error("series did not converge within the term cap")]
    NonConvergence,
    /// Quadrature error estimate exceeded its tolerance.
    #[error("quadrature accuracy estimate exceeded tolerance")]
    QuadratureAccuracy,
}
