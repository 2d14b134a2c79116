//! Subcommand implementations and CSV writers.
//!
//! Every file cell is written with 12 significant digits; non-finite
//! values are left blank so downstream tools never parse an `inf`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use kernel::{build_resolvent, resolvent_residual, ResolventTable, TimeGrid};
use sde::{PathEnsemble, SimConfig};
use stabilizer::{stabilizer_asymptote, stabilizer_discrete, Route, SeriesStabilizer, Stabilizer};
use stats::MomentReport;

use crate::config::Config;
use crate::{Error, Result};

fn num(e: impl std::fmt::Display) -> Error {
    Error::Numerical(e.to_string())
}

fn fmt_cell(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else {
        String::new()
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn write_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    let mut text = String::with_capacity(header.len() + 1 + rows.len() * 20);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                text.push(',');
            }
            text.push_str(&fmt_cell(*v));
        }
        text.push('\n');
    }
    write_file(path, &text)
}

fn build_table(config: &Config) -> Result<(ResolventTable, TimeGrid)> {
    let grid = config.grid()?;
    let table = build_resolvent(&config.kernel, config.lambda, &grid).map_err(num)?;
    Ok((table, grid))
}

fn run_simulation(config: &Config) -> Result<(PathEnsemble, ResolventTable, SimConfig)> {
    let sc = config.sim_config()?;
    let table = build_resolvent(&sc.kernel, sc.lambda, &sc.grid).map_err(num)?;
    let stab = Stabilizer::build(&table, sc.c).map_err(num)?;
    let ensemble = sde::simulate(&sc, &table, &stab).map_err(num)?;
    Ok((ensemble, table, sc))
}

fn write_moments(report: &MomentReport, path: &Path) -> Result<()> {
    let grid = report.grid;
    let rows: Vec<Vec<f64>> = (0..grid.len())
        .map(|k| {
            vec![
                grid.point(k),
                report.mean[k],
                report.stddev[k],
                report.e_sigma2[k],
                report.stderr_mean[k],
                report.stderr_var[k],
                report.stderr_esigma2[k],
            ]
        })
        .collect();
    write_csv(
        path,
        "t,mean,stddev,e_sigma2,stderr_mean,stderr_var,stderr_esigma2",
        &rows,
    )
}

fn write_paths(ensemble: &PathEnsemble, count: usize, path: &Path) -> Result<()> {
    let grid = ensemble.config().grid;
    let shown = count.min(ensemble.n_paths());
    let mut header = String::from("t");
    for p in 0..shown {
        write!(header, ",path_{p}").expect("string write");
    }
    let rows: Vec<Vec<f64>> = (0..grid.len())
        .map(|k| {
            let mut row = Vec::with_capacity(shown + 1);
            row.push(grid.point(k));
            row.extend((0..shown).map(|p| ensemble.path(p)[k]));
            row
        })
        .collect();
    write_csv(path, &header, &rows)
}

fn grid_index(grid: &TimeGrid, t: f64, what: &str) -> Result<usize> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Config(format!("{what} must be a nonnegative time")));
    }
    let k = (t / grid.dt()).round();
    if (k * grid.dt() - t).abs() > 1e-9 * grid.t_max() {
        return Err(Error::Config(format!(
            "{what} = {t} does not land on a grid point"
        )));
    }
    let k = k as usize;
    if k > grid.n() {
        return Err(Error::Config(format!("{what} = {t} lies past the grid end")));
    }
    Ok(k)
}

/// Tabulates the resolvent pair into `resolvent.csv` (columns `t,R,f`).
///
/// For kernels whose `f` diverges at zero the first `f` cell carries the
/// first-cell average stored in the table.
pub fn resolvent(config: &Config, out: &Path) -> Result<()> {
    let (table, grid) = build_table(config)?;
    let rows: Vec<Vec<f64>> = (0..grid.len())
        .map(|k| vec![grid.point(k), table.r_values()[k], table.f_values()[k]])
        .collect();
    write_csv(&out.join("resolvent.csv"), "t,R,f", &rows)?;
    let residual = resolvent_residual(&table).map_err(num)?;
    println!("RESOLVENT n={} residual={:.11e}", grid.n(), residual);
    Ok(())
}

/// Emits the variance profile into `stabilizer.csv` (columns
/// `t,sigma2_series,sigma2_discrete,asymptote`).
///
/// The series column is filled only when the power-series route is
/// trusted for the whole grid; otherwise it stays blank.
pub fn stabilizer(config: &Config, out: &Path) -> Result<()> {
    let c = config.require_c()?;
    let (table, grid) = build_table(config)?;
    let stab = Stabilizer::build(&table, c).map_err(num)?;
    let discrete = stabilizer_discrete(&table, c).map_err(num)?;
    let asymptote = stabilizer_asymptote(&table, c).map_err(num)?;
    let series = match (stab.route(), &config.kernel) {
        (Route::Series, &kernel::KernelSpec::Fractional { alpha }) => {
            Some(SeriesStabilizer::new(alpha, config.lambda, c).map_err(num)?)
        }
        _ => None,
    };
    let mut text = String::from("t,sigma2_series,sigma2_discrete,asymptote\n");
    for k in 0..grid.len() {
        let t = grid.point(k);
        let series_cell = series
            .as_ref()
            .and_then(|s| s.eval(t).ok())
            .map(fmt_cell)
            .unwrap_or_default();
        let _ = writeln!(
            text,
            "{},{},{},{}",
            fmt_cell(t),
            series_cell,
            fmt_cell(discrete.values[k]),
            fmt_cell(asymptote)
        );
    }
    write_file(&out.join("stabilizer.csv"), &text)?;
    println!(
        "STABILIZER route={:?} asymptote={:.11e} negative_cells={}",
        stab.route(),
        asymptote,
        stab.negative_count()
    );
    Ok(())
}

/// Samples an ensemble and writes `moments.csv`, plus `paths.csv` with the
/// first `sample_paths` paths when that key is positive.
pub fn simulate(config: &Config, out: &Path) -> Result<()> {
    let (ensemble, _, sc) = run_simulation(config)?;
    let report = stats::moments(&ensemble).map_err(num)?;
    write_moments(&report, &out.join("moments.csv"))?;
    if config.sample_paths > 0 {
        write_paths(&ensemble, config.sample_paths, &out.join("paths.csv"))?;
    }
    println!(
        "SIMULATE paths={} steps={} sigma_clamps={} stabilizer_clamps={}",
        sc.paths,
        sc.grid.n(),
        ensemble.sigma_clamps(),
        ensemble.stabilizer_clamps()
    );
    Ok(())
}

/// Simulates and checks the run's invariants, writing `moments.csv` and
/// printing one summary line per check. Any failed check exits with the
/// numerical-failure code.
pub fn verify(config: &Config, out: &Path) -> Result<()> {
    let (ensemble, table, sc) = run_simulation(config)?;
    let report = stats::moments(&ensemble).map_err(num)?;
    write_moments(&report, &out.join("moments.csv"))?;
    let checks = [
        stats::check_variance_flatness(&report),
        stats::check_sigma_flatness(&report),
        stats::check_mean_decay(&report, &table, sc.initial.mean()).map_err(num)?,
        stats::check_moment_bound(&report, &sc),
    ];
    let mut failed = Vec::new();
    for check in &checks {
        println!(
            "INVARIANT {}: {} (worst {:.3e} of band at index {})",
            check.name,
            if check.pass { "PASS" } else { "FAIL" },
            check.worst,
            check.argmax
        );
        if !check.pass {
            failed.push(check.name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Numerical(format!(
            "invariant violation: {}",
            failed.join(", ")
        )))
    }
}

/// Couples two starting laws on shared noise and writes the pathwise
/// L2 gap profile into `confluence.csv` (columns `t,gap`).
pub fn confluence(config: &Config, out: &Path) -> Result<()> {
    let sc_a = config.sim_config()?;
    let init_b = config
        .initial_b
        .clone()
        .ok_or_else(|| Error::Config("confluence needs init_b.type and init_b.params".into()))?;
    let mut sc_b = sc_a.clone();
    sc_b.initial = init_b;
    sc_b.validate().map_err(|e| Error::Config(e.to_string()))?;
    let table = build_resolvent(&sc_a.kernel, sc_a.lambda, &sc_a.grid).map_err(num)?;
    let stab = Stabilizer::build(&table, sc_a.c).map_err(num)?;
    let (ens_a, ens_b) = sde::simulate_coupled(&sc_a, &sc_b, &table, &stab).map_err(num)?;
    let gaps = stats::confluence(&ens_a, &ens_b).map_err(num)?;
    let grid = sc_a.grid;
    let rows: Vec<Vec<f64>> = gaps
        .iter()
        .enumerate()
        .map(|(k, g)| vec![grid.point(k), *g])
        .collect();
    write_csv(&out.join("confluence.csv"), "t,gap", &rows)?;
    let ratio = if gaps[0] > 0.0 {
        gaps[grid.n()] / gaps[0]
    } else {
        f64::NAN
    };
    println!(
        "CONFLUENCE gap_start={:.11e} gap_end={:.11e} ratio={:.11e}",
        gaps[0],
        gaps[grid.n()],
        ratio
    );
    Ok(())
}

/// Compares empirical autocovariances at `base_t` with the long-run
/// prediction, writing `autocov.csv` (columns
/// `lag,empirical,stderr,theory`).
pub fn autocov(config: &Config, out: &Path) -> Result<()> {
    let sc = config.sim_config()?;
    let base_t = config
        .base_t
        .ok_or_else(|| Error::Config("autocov needs base_t".into()))?;
    let lags = config
        .lags
        .clone()
        .ok_or_else(|| Error::Config("autocov needs lags".into()))?;
    let grid = sc.grid;
    let base = grid_index(&grid, base_t, "base_t")?;
    let mut offsets = Vec::with_capacity(lags.len());
    for &lag in &lags {
        let offset = grid_index(&grid, lag, "lag")?;
        if base + offset > grid.n() {
            return Err(Error::Config(format!(
                "lag = {lag} runs past the grid end from base_t = {base_t}"
            )));
        }
        offsets.push(offset);
    }
    let targets = stats::fake_regime_targets(&sc.diffusion, sc.c)
        .map_err(|e| Error::Config(e.to_string()))?;
    let (ensemble, table, _) = run_simulation(config)?;
    let mut rows = Vec::with_capacity(offsets.len());
    for &offset in &offsets {
        let estimate = stats::empirical_autocov(&ensemble, base, offset).map_err(num)?;
        let s = offset as f64 * grid.dt();
        let theory = stats::longrun_autocov(&table, targets.v0, 1.0, s).map_err(num)?;
        rows.push(vec![s, estimate.value, estimate.stderr, theory]);
    }
    write_csv(&out.join("autocov.csv"), "lag,empirical,stderr,theory", &rows)?;
    println!(
        "AUTOCOV base_t={:.11e} lags={} v0={:.11e}",
        base as f64 * grid.dt(),
        offsets.len(),
        targets.v0
    );
    Ok(())
}
