//! Ensemble statistics for the stabilized Volterra sampler.
//!
//! Estimates per-time moments of a simulated ensemble, computes the fake
//! stationary targets that a well-tuned run must hold flat, evaluates the
//! long-run autocovariance predicted by the resolvent, and measures the L2
//! gap between two runs coupled through their noise.
//!
//! The estimators are plain reductions over paths, parallel across grid
//! points; every band quoted by the checking helpers uses normal-theory
//! standard errors, with four standard errors as the conventional pass
//! threshold so that sweeps over hundreds of grid points stay quiet.

mod invariants;
mod longrun;

pub use invariants::{
    check_autocov_match, check_confluence_decay, check_mean_decay, check_moment_bound,
    check_sigma_flatness, check_variance_flatness, InvariantCheck,
};
pub use longrun::longrun_autocov;

use kernel::TimeGrid;
use rayon::prelude::*;
use sde::{DiffusionSpec, PathEnsemble};

/// Errors reported by the estimators.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A precondition on the inputs failed.
    #[error("domain error: {0}")]
    Domain(&'static str),
    /// Two ensembles disagree where they must match.
    #[error("mismatch: {0}")]
    Mismatch(&'static str),
    /// Input from the kernel layer was rejected.
    #[error(transparent)]
    Kernel(#[from] kernel::Error),
    /// Input from the sampler layer was rejected.
    #[error(transparent)]
    Sde(#[from] sde::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Stationary reference values attached to a moment report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeTargets {
    /// Mean-reversion level `mu0 / lambda`.
    pub x_inf: f64,
    /// Flat variance of the fake regime.
    pub v0: f64,
    /// Flat mean of the squared diffusion coefficient.
    pub sigma_bar0_sq: f64,
}

/// The pair of flat levels a fake stationary run maintains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FakeRegimeTargets {
    /// Variance level.
    pub v0: f64,
    /// Mean squared-diffusion level.
    pub sigma_bar0_sq: f64,
}

/// Per-time sample moments of an ensemble with their standard errors.
#[derive(Debug, Clone)]
pub struct MomentReport {
    /// Grid the ensemble was sampled on.
    pub grid: TimeGrid,
    /// Sample mean per grid point.
    pub mean: Vec<f64>,
    /// Unbiased sample standard deviation per grid point.
    pub stddev: Vec<f64>,
    /// Sample mean of the squared diffusion coefficient per grid point.
    pub e_sigma2: Vec<f64>,
    /// Standard error of the mean, `s / sqrt(M)`.
    pub stderr_mean: Vec<f64>,
    /// Standard error of the sample variance, `s^2 sqrt(2 / (M - 1))`.
    pub stderr_var: Vec<f64>,
    /// Standard error of the squared-diffusion mean.
    pub stderr_esigma2: Vec<f64>,
    /// Reference levels implied by the run's configuration.
    pub targets: RegimeTargets,
}

/// Estimates per-time moments of an ensemble.
///
/// Requires at least two paths. The squared diffusion coefficient is
/// evaluated exactly as the sampler applied it, clamping included.
pub fn moments(ensemble: &PathEnsemble) -> Result<MomentReport> {
    let config = ensemble.config();
    let m = config.paths;
    if m < 2 {
        return Err(Error::Domain("moment estimation needs at least two paths"));
    }
    let n = config.grid.n();
    let fake = fake_regime_targets(&config.diffusion, config.c)?;
    let targets = RegimeTargets {
        x_inf: config.x_inf(),
        v0: fake.v0,
        sigma_bar0_sq: fake.sigma_bar0_sq,
    };

    let mf = m as f64;
    let columns: Vec<[f64; 6]> = (0..=n)
        .into_par_iter()
        .map(|k| {
            let mut mean = 0.0;
            let mut mean_sig = 0.0;
            for p in 0..m {
                let x = ensemble.path(p)[k];
                mean += x;
                mean_sig += config.diffusion.sigma_sq(x);
            }
            mean /= mf;
            mean_sig /= mf;
            let mut var = 0.0;
            let mut var_sig = 0.0;
            for p in 0..m {
                let x = ensemble.path(p)[k];
                var += (x - mean) * (x - mean);
                let s = config.diffusion.sigma_sq(x);
                var_sig += (s - mean_sig) * (s - mean_sig);
            }
            var /= mf - 1.0;
            var_sig /= mf - 1.0;
            [
                mean,
                var.sqrt(),
                mean_sig,
                (var / mf).sqrt(),
                var * (2.0 / (mf - 1.0)).sqrt(),
                (var_sig / mf).sqrt(),
            ]
        })
        .collect();

    let pick = |i: usize| columns.iter().map(|c| c[i]).collect::<Vec<f64>>();
    Ok(MomentReport {
        grid: config.grid,
        mean: pick(0),
        stddev: pick(1),
        e_sigma2: pick(2),
        stderr_mean: pick(3),
        stderr_var: pick(4),
        stderr_esigma2: pick(5),
        targets,
    })
}

/// Flat variance and squared-diffusion levels of the fake stationary regime.
///
/// The trinomial coefficient is read at its own center, which the regime
/// construction places at the mean-reversion level.
pub fn fake_regime_targets(diffusion: &DiffusionSpec, c: f64) -> Result<FakeRegimeTargets> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain("variance fraction must be positive"));
    }
    match *diffusion {
        DiffusionSpec::ConstantSigma { sigma } => Ok(FakeRegimeTargets {
            v0: c * sigma * sigma,
            sigma_bar0_sq: sigma * sigma,
        }),
        DiffusionSpec::Trinomial { kappa0, kappa2, .. } => {
            let denom = 1.0 - c * kappa2;
            if denom <= 0.0 {
                return Err(Error::Domain(
                    "curvature too large: the fake regime needs c * kappa2 < 1",
                ));
            }
            Ok(FakeRegimeTargets {
                v0: c * kappa0 / denom,
                sigma_bar0_sq: kappa0 / denom,
            })
        }
        DiffusionSpec::TanhDegenerate { .. } => Ok(FakeRegimeTargets {
            v0: 0.0,
            sigma_bar0_sq: 0.0,
        }),
    }
}

/// Autocovariance estimate with its normal-theory standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutocovEstimate {
    /// Sample covariance between the two grid points.
    pub value: f64,
    /// Approximate standard error `sqrt((v_t v_s + value^2) / (M - 1))`.
    pub stderr: f64,
}

/// Sample autocovariance between `t_base` and `t_(base + lag)`.
pub fn empirical_autocov(
    ensemble: &PathEnsemble,
    base: usize,
    lag: usize,
) -> Result<AutocovEstimate> {
    let config = ensemble.config();
    let m = config.paths;
    if m < 2 {
        return Err(Error::Domain("autocovariance needs at least two paths"));
    }
    let n = config.grid.n();
    if base + lag > n {
        return Err(Error::Domain("autocovariance lag runs past the grid"));
    }
    let k1 = base;
    let k2 = base + lag;
    let mf = m as f64;
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for p in 0..m {
        m1 += ensemble.path(p)[k1];
        m2 += ensemble.path(p)[k2];
    }
    m1 /= mf;
    m2 /= mf;
    let mut cov = 0.0;
    let mut v1 = 0.0;
    let mut v2 = 0.0;
    for p in 0..m {
        let a = ensemble.path(p)[k1] - m1;
        let b = ensemble.path(p)[k2] - m2;
        cov += a * b;
        v1 += a * a;
        v2 += b * b;
    }
    cov /= mf - 1.0;
    v1 /= mf - 1.0;
    v2 /= mf - 1.0;
    Ok(AutocovEstimate {
        value: cov,
        stderr: ((v1 * v2 + cov * cov) / (mf - 1.0)).sqrt(),
    })
}

/// Per-time L2 gap between two runs coupled through their noise.
///
/// The ensembles must come from configurations that agree in everything but
/// the starting law; in particular they share the seed, so path `m` of one
/// run consumed the same draws as path `m` of the other.
pub fn confluence(ens_a: &PathEnsemble, ens_b: &PathEnsemble) -> Result<Vec<f64>> {
    let ca = ens_a.config();
    let mut probe = ens_b.config().clone();
    probe.initial = ca.initial.clone();
    if probe != *ca {
        return Err(Error::Mismatch(
            "confluence needs runs differing only in the starting law",
        ));
    }
    let m = ca.paths;
    let n = ca.grid.n();
    let mf = m as f64;
    Ok((0..=n)
        .into_par_iter()
        .map(|k| {
            let mut acc = 0.0;
            for p in 0..m {
                let d = ens_a.path(p)[k] - ens_b.path(p)[k];
                acc += d * d;
            }
            (acc / mf).sqrt()
        })
        .collect())
}
