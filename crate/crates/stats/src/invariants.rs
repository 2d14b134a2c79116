//! Pass/fail checks over ensembles, with violations measured in band units.

use kernel::ResolventTable;
use sde::{PathEnsemble, SimConfig};

use crate::{empirical_autocov, longrun_autocov, Error, MomentReport, Result};

/// Outcome of one invariant sweep.
///
/// `worst` is the largest deviation divided by its allowance, so any value
/// at or below 1 passes; `argmax` is the grid index (or lag index) where the
/// worst ratio occurred.
#[derive(Debug, Clone, Copy)]
pub struct InvariantCheck {
    /// Short stable identifier, printable in summaries.
    pub name: &'static str,
    /// Whether every point stayed inside its band.
    pub pass: bool,
    /// Largest deviation in band units.
    pub worst: f64,
    /// Index achieving `worst`.
    pub argmax: usize,
}

impl InvariantCheck {
    fn from_ratios(name: &'static str, ratios: impl Iterator<Item = f64>) -> Self {
        let mut worst = 0.0_f64;
        let mut argmax = 0;
        for (k, r) in ratios.enumerate() {
            if r > worst {
                worst = r;
                argmax = k;
            }
        }
        InvariantCheck {
            name,
            pass: worst <= 1.0,
            worst,
            argmax,
        }
    }
}

/// Flatness of the sample variance around the regime level `v0`.
///
/// Every grid point must satisfy `|stddev^2 - v0| <= 4 stderr_var`.
pub fn check_variance_flatness(report: &MomentReport) -> InvariantCheck {
    let v0 = report.targets.v0;
    InvariantCheck::from_ratios(
        "variance-flat",
        report
            .stddev
            .iter()
            .zip(&report.stderr_var)
            .map(|(s, se)| (s * s - v0).abs() / (4.0 * se)),
    )
}

/// Flatness of the mean squared diffusion around `sigma_bar0_sq`.
pub fn check_sigma_flatness(report: &MomentReport) -> InvariantCheck {
    let target = report.targets.sigma_bar0_sq;
    InvariantCheck::from_ratios(
        "sigma2-flat",
        report
            .e_sigma2
            .iter()
            .zip(&report.stderr_esigma2)
            .map(|(e, se)| (e - target).abs() / (4.0 * se)),
    )
}

/// Decay of the sample mean onto the reversion level.
///
/// Every grid point must satisfy
/// `|mean(t_k) - x_inf| <= |e_x0 - x_inf| R(t_k) + 4 stderr_mean`.
pub fn check_mean_decay(
    report: &MomentReport,
    table: &ResolventTable,
    e_x0: f64,
) -> Result<InvariantCheck> {
    let r = table.r_values();
    if r.len() != report.mean.len() {
        return Err(Error::Mismatch("report grid differs from the table grid"));
    }
    let x_inf = report.targets.x_inf;
    let gap0 = (e_x0 - x_inf).abs();
    Ok(InvariantCheck::from_ratios(
        "mean-decay",
        report
            .mean
            .iter()
            .zip(r)
            .zip(&report.stderr_mean)
            .map(|((m, rk), se)| (m - x_inf).abs() / (gap0 * rk.abs() + 4.0 * se)),
    ))
}

/// Uniform bound on the centered second moment.
///
/// The contraction gives the ceiling
/// `(sqrt(c) sigma(x_inf) / (1 - sqrt(c kappa)))^2`; the start may exceed it,
/// so the allowance is 1.2 times the larger of that ceiling and the starting
/// centered second moment.
pub fn check_moment_bound(report: &MomentReport, config: &SimConfig) -> InvariantCheck {
    let x_inf = report.targets.x_inf;
    let kappa = config.diffusion.lipschitz_sq();
    let contraction = 1.0 - (config.c * kappa).sqrt();
    let ceiling = config.c * config.diffusion.sigma_sq_at_center() / (contraction * contraction);
    let start = config.initial.variance() + (config.initial.mean() - x_inf).powi(2);
    let allowance = 1.2 * ceiling.max(start);
    InvariantCheck::from_ratios(
        "moment-bound",
        report
            .stddev
            .iter()
            .zip(&report.mean)
            .map(|(s, m)| (s * s + (m - x_inf).powi(2)) / allowance),
    )
}

/// Monotone decay of a confluence profile after 5-point smoothing.
///
/// The gap is averaged over a centered window of five grid points (shrunk at
/// the edges), then each rise is measured against `rel_slack` times the local
/// level. Sampling noise rides on a monotone envelope, so deterministic
/// couplings should pass with a tiny slack while Monte Carlo profiles get a
/// slack at their noise scale.
pub fn check_confluence_decay(gaps: &[f64], rel_slack: f64) -> InvariantCheck {
    let n = gaps.len();
    let smoothed: Vec<f64> = (0..n)
        .map(|k| {
            let lo = k.saturating_sub(2);
            let hi = (k + 2).min(n - 1);
            gaps[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect();
    InvariantCheck::from_ratios(
        "confluence-decay",
        smoothed.windows(2).map(|w| {
            let rise = w[1] - w[0];
            let slack = rel_slack * w[0].abs() + f64::EPSILON;
            rise / slack
        }),
    )
}

/// Empirical autocovariance against the long-run prediction.
///
/// `base_time` and each lag must land on grid points. Every lag must match
/// `longrun_autocov` within four standard errors of the estimate; `argmax`
/// indexes into `lags`.
pub fn check_autocov_match(
    ensemble: &PathEnsemble,
    table: &ResolventTable,
    v0: f64,
    phi_inf: f64,
    base_time: f64,
    lags: &[f64],
) -> Result<InvariantCheck> {
    let grid = ensemble.config().grid;
    let dt = grid.dt();
    let on_grid = |t: f64| -> Result<usize> {
        let k = (t / dt).round();
        if (k * dt - t).abs() > 1e-9 * grid.t_max() || k < 0.0 {
            return Err(Error::Domain("time does not land on a grid point"));
        }
        Ok(k as usize)
    };
    let base = on_grid(base_time)?;
    let mut ratios = Vec::with_capacity(lags.len());
    for &lag in lags {
        let offset = on_grid(lag)?;
        let estimate = empirical_autocov(ensemble, base, offset)?;
        let theory = longrun_autocov(table, v0, phi_inf, offset as f64 * dt)?;
        ratios.push((estimate.value - theory).abs() / (4.0 * estimate.stderr));
    }
    Ok(InvariantCheck::from_ratios(
        "autocov-match",
        ratios.into_iter(),
    ))
}
