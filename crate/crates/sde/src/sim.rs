//! Path sampler built on the exact Gaussian increments.
//!
//! Each step `l` draws the joint vector of the Brownian increment and every
//! kernel-weighted future increment from the leading block of the master
//! factorization, scales it by the stabilizer profile and the diffusion
//! coefficient at the previous state, and scatters the result onto all later
//! grid points. The state at `t_k` is then the deterministic mean reversion
//! plus the accumulated scatter, with no time-stepping error beyond the
//! covariance quadrature.
//!
//! Randomness is organized as one counter-mode stream per `(path, step)`
//! pair, so ensembles are reproducible bit for bit for a given seed no
//! matter how work is distributed across threads, and a coupled pair of
//! runs can consume identical noise by construction.

use std::sync::atomic::{AtomicU64, Ordering};

use kernel::ResolventTable;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use stabilizer::Stabilizer;

use crate::cov::assemble_covariance;
use crate::ldl::{ldl_factorize, GaussianIncrementFactors};
use crate::{DiffusionSpec, Error, InitialLaw, Result, SimConfig};

/// Highest stream index, reserved for the starting draw.
const LAST_STREAM: u64 = (1 << 20) - 1;

/// Simulated ensemble: every path sampled on the full grid.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    config: SimConfig,
    times: Vec<f64>,
    values: Vec<f64>,
    sigma_clamps: u64,
    stabilizer_clamps: u64,
}

impl PathEnsemble {
    /// Configuration the ensemble was generated from.
    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// Grid points `t_0..=t_n`.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Number of paths.
    pub fn n_paths(&self) -> usize {
        self.config.paths
    }

    /// Samples per path, `n + 1`.
    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    /// One path, aligned with [`PathEnsemble::times`].
    pub fn path(&self, m: usize) -> &[f64] {
        let w = self.n_times();
        &self.values[m * w..(m + 1) * w]
    }

    /// All samples, row-major with one path per row.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Times the diffusion coefficient was clamped at zero from below.
    pub fn sigma_clamps(&self) -> u64 {
        self.sigma_clamps
    }

    /// Negative stabilizer samples zeroed before taking square roots.
    pub fn stabilizer_clamps(&self) -> u64 {
        self.stabilizer_clamps
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn derive_key(seed: u64) -> [u8; 32] {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

fn stream_rng(key: &[u8; 32], stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::from_seed(*key);
    rng.set_stream(stream);
    rng
}

fn draw_initial(law: &InitialLaw, key: &[u8; 32], stream: u64) -> f64 {
    match *law {
        InitialLaw::Point { value } => value,
        InitialLaw::Normal { mean, var } => {
            let z: f64 = stream_rng(key, stream).sample(StandardNormal);
            mean + var.sqrt() * z
        }
        InitialLaw::Uniform { lo, hi } => lo + (hi - lo) * stream_rng(key, stream).gen::<f64>(),
    }
}

/// Everything shared by all paths of a run.
struct Engine<'a> {
    factors: GaussianIncrementFactors,
    r: &'a [f64],
    /// Square roots of the clamped stabilizer samples; entry 0 unused.
    varsigma: Vec<f64>,
    /// Mean-reversion rate paired with the table's normalization.
    lam: f64,
    key: [u8; 32],
    n: usize,
}

/// Per-member data that differs between coupled runs.
struct Member {
    x_inf: f64,
    initial: InitialLaw,
    diffusion: DiffusionSpec,
}

fn prepare<'a>(
    config: &SimConfig,
    table: &'a ResolventTable,
    stab: &Stabilizer,
) -> Result<(Engine<'a>, u64)> {
    config.validate()?;
    if *table.grid() != config.grid {
        return Err(Error::Mismatch("config grid differs from the resolvent table"));
    }
    let (nspec, lam) = config.kernel.normalized(config.lambda);
    if *table.spec() != nspec || table.lambda() != lam {
        return Err(Error::Mismatch(
            "config kernel and rate differ from the resolvent table",
        ));
    }
    let n = config.grid.n();
    if stab.values().len() != n + 1 {
        return Err(Error::Mismatch("stabilizer length differs from the grid"));
    }
    let mut stabilizer_clamps = 0u64;
    let mut varsigma = vec![0.0; n + 1];
    for (slot, &v) in varsigma[1..].iter_mut().zip(&stab.values()[1..]) {
        if !v.is_finite() {
            return Err(Error::Domain(
                "stabilizer samples past the origin must be finite",
            ));
        }
        *slot = if v < 0.0 {
            stabilizer_clamps += 1;
            0.0
        } else {
            v.sqrt()
        };
    }
    let cov = assemble_covariance(table, &config.grid)?;
    let factors = ldl_factorize(&cov)?;
    Ok((
        Engine {
            factors,
            r: table.r_values(),
            varsigma,
            lam,
            key: derive_key(config.seed),
            n,
        },
        stabilizer_clamps,
    ))
}

/// Samples path `m` for every member, reusing one noise stream per step.
fn run_path(
    eng: &Engine,
    members: &[Member],
    m: usize,
    rows: &mut [&mut [f64]],
    z: &mut [f64],
    acc: &mut [Vec<f64>],
    clamp_sinks: &[AtomicU64],
) -> Result<()> {
    let n = eng.n;
    let count = members.len();
    let base = (m as u64) << 20;
    let mut clamps = [0u64; 2];
    for idx in 0..count {
        let stream = LAST_STREAM - (count - 1 - idx) as u64;
        rows[idx][0] = draw_initial(&members[idx].initial, &eng.key, base | stream);
        acc[idx].fill(0.0);
    }
    let mut beta = [0.0f64; 2];
    for l in 1..=n {
        let vs = eng.varsigma[l];
        let mut active = false;
        for idx in 0..count {
            let sig_sq = members[idx]
                .diffusion
                .sigma_sq_clamped(rows[idx][l - 1], &mut clamps[idx]);
            beta[idx] = vs * sig_sq.sqrt() / eng.lam;
            active |= beta[idx] != 0.0;
        }
        if active {
            let sub = n - l + 2;
            let mut rng = stream_rng(&eng.key, base | l as u64);
            for slot in z[..sub].iter_mut() {
                *slot = rng.sample(StandardNormal);
            }
            for i in 0..=(n - l) {
                let row = eng.factors.scaled_row(1 + i);
                let mut g = 0.0;
                for (a, b) in row.iter().zip(z.iter()) {
                    g += a * b;
                }
                for idx in 0..count {
                    acc[idx][l + i] += beta[idx] * g;
                }
            }
        }
        for idx in 0..count {
            let member = &members[idx];
            let x0 = rows[idx][0];
            let x = member.x_inf + (x0 - member.x_inf) * eng.r[l] + acc[idx][l];
            if !x.is_finite() {
                return Err(Error::NonFinite { path: m, step: l });
            }
            rows[idx][l] = x;
        }
    }
    for idx in 0..count {
        clamp_sinks[idx].fetch_add(clamps[idx], Ordering::Relaxed);
    }
    Ok(())
}

fn run_members(
    configs: &[&SimConfig],
    table: &ResolventTable,
    stab: &Stabilizer,
) -> Result<Vec<PathEnsemble>> {
    let base = configs[0];
    let (eng, stabilizer_clamps) = prepare(base, table, stab)?;
    for other in &configs[1..] {
        other.validate()?;
        let mut probe = (*other).clone();
        probe.initial = base.initial.clone();
        if probe != *base {
            return Err(Error::Mismatch(
                "coupled runs must differ only in the starting law",
            ));
        }
    }

    let n = eng.n;
    let width = n + 1;
    let paths = base.paths;
    let members: Vec<Member> = configs
        .iter()
        .map(|c| Member {
            x_inf: c.x_inf(),
            initial: c.initial.clone(),
            diffusion: c.diffusion.clone(),
        })
        .collect();
    let clamp_sinks: Vec<AtomicU64> = configs.iter().map(|_| AtomicU64::new(0)).collect();
    let mut buffers: Vec<Vec<f64>> = configs.iter().map(|_| vec![0.0; paths * width]).collect();

    match buffers.as_mut_slice() {
        [single] => single
            .par_chunks_mut(width)
            .enumerate()
            .try_for_each_init(
                || (vec![0.0; width], vec![vec![0.0; width]; 1]),
                |(z, acc), (m, row)| {
                    let mut rows = [row];
                    run_path(&eng, &members, m, &mut rows, z, acc, &clamp_sinks)
                },
            )?,
        [first, second] => first
            .par_chunks_mut(width)
            .zip(second.par_chunks_mut(width))
            .enumerate()
            .try_for_each_init(
                || (vec![0.0; width], vec![vec![0.0; width]; 2]),
                |(z, acc), (m, (row_a, row_b))| {
                    let mut rows = [row_a, row_b];
                    run_path(&eng, &members, m, &mut rows, z, acc, &clamp_sinks)
                },
            )?,
        _ => return Err(Error::Domain("only one or two coupled members are supported")),
    }

    let times: Vec<f64> = (0..=n).map(|k| base.grid.point(k)).collect();
    Ok(configs
        .iter()
        .zip(buffers)
        .zip(clamp_sinks)
        .map(|((c, values), sink)| PathEnsemble {
            config: (*c).clone(),
            times: times.clone(),
            values,
            sigma_clamps: sink.into_inner(),
            stabilizer_clamps,
        })
        .collect())
}

/// Samples `config.paths` independent paths.
///
/// `table` must be the resolvent of `config`'s kernel and rate on
/// `config.grid`, and `stab` the stabilizer built from that same table with
/// `config.c`.
pub fn simulate(
    config: &SimConfig,
    table: &ResolventTable,
    stab: &Stabilizer,
) -> Result<PathEnsemble> {
    let mut out = run_members(&[config], table, stab)?;
    Ok(out.pop().expect("one member"))
}

/// Samples two runs driven by identical noise, differing only in their
/// starting law.
///
/// Path `m` of both ensembles consumes the same Gaussian draws at every
/// step, so the pathwise gap isolates the effect of the starting point.
pub fn simulate_coupled(
    first: &SimConfig,
    second: &SimConfig,
    table: &ResolventTable,
    stab: &Stabilizer,
) -> Result<(PathEnsemble, PathEnsemble)> {
    let mut out = run_members(&[first, second], table, stab)?;
    let b = out.pop().expect("two members");
    let a = out.pop().expect("two members");
    Ok((a, b))
}
