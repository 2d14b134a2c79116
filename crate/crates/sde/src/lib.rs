//! Simulation of stabilized Volterra equations driven by a convolution
//! kernel.
//!
//! The scheme is semi-integrated: the deterministic part is carried by the
//! resolvent exactly, and the stochastic convolution increments
//! `I_k = ∫ f(t_k - s) dW_s` over one step are drawn jointly as an exact
//! Gaussian vector. Per step `l` the vector `(ΔW, I_l, ..., I_n)` has a
//! covariance that depends only on index offsets, so a single master
//! covariance matrix is assembled ([`assemble_covariance`]), factored once
//! ([`ldl_factorize`]), and its leading blocks are reused for every step.
//!
//! A path then evolves as
//! `X_k = x_inf + (X_0 - x_inf) R(t_k) + (1/lambda) Σ_l ς(t_l) σ(X_{l-1}) I_k^l`.

mod cov;
mod ldl;
mod sim;

pub use cov::{assemble_covariance, SymMatrix};
pub use ldl::{ldl_factorize, GaussianIncrementFactors};
pub use sim::{simulate, simulate_coupled, PathEnsemble};

use kernel::{KernelSpec, TimeGrid};

/// Errors produced by covariance assembly, factorization, and simulation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter is outside its admissible range.
    #[error("domain error: {0}")]
    Domain(&'static str),
    /// Inputs were built on different grids or configurations.
    #[error("mismatched inputs: {0}")]
    Mismatch(&'static str),
    /// A factorization pivot fell below the clamping tolerance.
    #[error("matrix is indefinite: pivot {pivot:.3e} at index {index} (tolerance {tolerance:.3e})")]
    Indefinite { pivot: f64, index: usize, tolerance: f64 },
    /// A quadrature routine failed to converge.
    #[error("quadrature failure: {0}")]
    Quadrature(&'static str),
    /// A path produced a non-finite value.
    #[error("non-finite state on path {path} at step {step}")]
    NonFinite { path: usize, step: usize },
    /// Error from the kernel layer.
    #[error(transparent)]
    Kernel(#[from] kernel::Error),
    /// Error from the special-function layer.
    #[error(transparent)]
    Special(#[from] specfun::Error),
}

/// Alias for results in this crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Largest admissible step count: step ids and the initial-value stream
/// share a 20-bit field of the RNG stream id.
pub const MAX_STEPS: usize = (1 << 20) - 3;

/// Diffusion coefficient `sigma(x)`, specified through its square.
#[derive(Clone, Debug, PartialEq)]
pub enum DiffusionSpec {
    /// State-independent volatility.
    ConstantSigma { sigma: f64 },
    /// `sigma^2(x) = kappa0 + kappa1 (x - center) + kappa2 (x - center)^2`.
    Trinomial { kappa0: f64, kappa1: f64, kappa2: f64, center: f64 },
    /// `sigma^2(x) = tanh(x - center) / 2` for `x >= center`, zero below
    /// (the formula is real only above the center; clamps are counted).
    TanhDegenerate { center: f64 },
}

impl DiffusionSpec {
    /// Validates the coefficient ranges.
    pub fn validate(&self) -> Result<()> {
        match *self {
            DiffusionSpec::ConstantSigma { sigma } => {
                if !(sigma.is_finite() && sigma >= 0.0) {
                    return Err(Error::Domain("constant sigma must be finite and >= 0"));
                }
            }
            DiffusionSpec::Trinomial { kappa0, kappa1, kappa2, center } => {
                if !(kappa0.is_finite() && kappa0 >= 0.0) {
                    return Err(Error::Domain("kappa0 must be finite and >= 0"));
                }
                if !(kappa2.is_finite() && kappa2 >= 0.0) {
                    return Err(Error::Domain("kappa2 must be finite and >= 0"));
                }
                if !kappa1.is_finite() || !center.is_finite() {
                    return Err(Error::Domain("kappa1 and center must be finite"));
                }
                // nonnegative radicand for every x
                if kappa1 * kappa1 > 4.0 * kappa0 * kappa2 * (1.0 + 1e-12) {
                    return Err(Error::Domain("trinomial needs kappa1^2 <= 4 kappa0 kappa2"));
                }
            }
            DiffusionSpec::TanhDegenerate { center } => {
                if !center.is_finite() {
                    return Err(Error::Domain("center must be finite"));
                }
            }
        }
        Ok(())
    }

    /// `sigma^2(x)` with a negative radicand clamped to zero; `clamps` is
    /// incremented whenever the raw value was negative (including the
    /// below-center region of the degenerate variant).
    pub fn sigma_sq_clamped(&self, x: f64, clamps: &mut u64) -> f64 {
        match *self {
            DiffusionSpec::ConstantSigma { sigma } => sigma * sigma,
            DiffusionSpec::Trinomial { kappa0, kappa1, kappa2, center } => {
                let u = x - center;
                let raw = kappa0 + kappa1 * u + kappa2 * u * u;
                if raw < 0.0 {
                    *clamps += 1;
                    0.0
                } else {
                    raw
                }
            }
            DiffusionSpec::TanhDegenerate { center } => {
                if x < center {
                    *clamps += 1;
                    0.0
                } else {
                    0.5 * (x - center).tanh()
                }
            }
        }
    }

    /// `sigma^2(x)` without clamp bookkeeping.
    pub fn sigma_sq(&self, x: f64) -> f64 {
        let mut scratch = 0;
        self.sigma_sq_clamped(x, &mut scratch)
    }

    /// `sigma^2` evaluated at the diffusion's own center (the mean-reversion
    /// level for the state-dependent variants).
    pub fn sigma_sq_at_center(&self) -> f64 {
        match *self {
            DiffusionSpec::ConstantSigma { sigma } => sigma * sigma,
            DiffusionSpec::Trinomial { kappa0, .. } => kappa0,
            DiffusionSpec::TanhDegenerate { .. } => 0.0,
        }
    }

    /// Quadratic growth constant `kappa` entering the admissibility
    /// condition `c * kappa < 1`: the squared Lipschitz constant of `sigma`
    /// for the trinomial variant, the slope bound of `sigma^2` for the
    /// degenerate variant (whose `sigma` itself has a square-root cusp).
    pub fn lipschitz_sq(&self) -> f64 {
        match *self {
            DiffusionSpec::ConstantSigma { .. } => 0.0,
            DiffusionSpec::Trinomial { kappa2, .. } => kappa2,
            DiffusionSpec::TanhDegenerate { .. } => 0.5,
        }
    }
}

/// Law of the starting value `X_0`, drawn independently of the driving
/// noise from a dedicated RNG stream.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialLaw {
    Point { value: f64 },
    Normal { mean: f64, var: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl InitialLaw {
    /// Validates the parameter ranges.
    pub fn validate(&self) -> Result<()> {
        match *self {
            InitialLaw::Point { value } => {
                if !value.is_finite() {
                    return Err(Error::Domain("point mass must be finite"));
                }
            }
            InitialLaw::Normal { mean, var } => {
                if !mean.is_finite() || !(var.is_finite() && var >= 0.0) {
                    return Err(Error::Domain("normal law needs finite mean and var >= 0"));
                }
            }
            InitialLaw::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(Error::Domain("uniform law needs lo <= hi"));
                }
            }
        }
        Ok(())
    }

    /// Mean of the law.
    pub fn mean(&self) -> f64 {
        match *self {
            InitialLaw::Point { value } => value,
            InitialLaw::Normal { mean, .. } => mean,
            InitialLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    /// Variance of the law.
    pub fn variance(&self) -> f64 {
        match *self {
            InitialLaw::Point { .. } => 0.0,
            InitialLaw::Normal { var, .. } => var,
            InitialLaw::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
        }
    }
}

/// Full description of one simulation run.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub kernel: KernelSpec,
    pub lambda: f64,
    pub mu0: f64,
    pub c: f64,
    pub diffusion: DiffusionSpec,
    pub initial: InitialLaw,
    pub grid: TimeGrid,
    pub paths: usize,
    pub seed: u64,
}

impl SimConfig {
    /// Validates every component and the coupling condition `c * kappa < 1`.
    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::Domain("lambda must be finite and > 0"));
        }
        if !self.mu0.is_finite() {
            return Err(Error::Domain("mu0 must be finite"));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::Domain("c must be finite and > 0"));
        }
        self.diffusion.validate()?;
        self.initial.validate()?;
        if self.paths == 0 {
            return Err(Error::Domain("at least one path is required"));
        }
        if self.grid.n() > MAX_STEPS {
            return Err(Error::Domain("step count exceeds the RNG stream budget"));
        }
        if self.c * self.diffusion.lipschitz_sq() >= 1.0 {
            return Err(Error::Domain("need c * kappa < 1 for a stable regime"));
        }
        Ok(())
    }

    /// Mean-reversion level `x_inf = mu0 / lambda`.
    pub fn x_inf(&self) -> f64 {
        self.mu0 / self.lambda
    }
}
