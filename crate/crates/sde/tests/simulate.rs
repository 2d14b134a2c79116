//! Path sampler behaviour: determinism, coupling, and moment tracking.

use kernel::{build_resolvent, KernelSpec, TimeGrid};
use proptest::prelude::*;
use sde::{simulate, simulate_coupled, DiffusionSpec, Error, InitialLaw, SimConfig};
use stabilizer::Stabilizer;

fn flat_config() -> SimConfig {
    SimConfig {
        kernel: KernelSpec::Constant { level: 1.0 },
        lambda: 0.2,
        mu0: 2.0,
        c: 0.36,
        diffusion: DiffusionSpec::ConstantSigma { sigma: 0.5 },
        initial: InitialLaw::Point { value: 10.0 },
        grid: TimeGrid::new(1.0, 50).unwrap(),
        paths: 64,
        seed: 42,
    }
}

fn run(config: &SimConfig) -> sde::PathEnsemble {
    let table = build_resolvent(&config.kernel, config.lambda, &config.grid).unwrap();
    let stab = Stabilizer::build(&table, config.c).unwrap();
    simulate(config, &table, &stab).unwrap()
}

#[test]
fn zero_diffusion_decays_on_the_resolvent() {
    let mut config = flat_config();
    config.diffusion = DiffusionSpec::ConstantSigma { sigma: 0.0 };
    config.initial = InitialLaw::Point { value: 5.0 };
    config.paths = 3;
    let out = run(&config);
    let x_inf = config.x_inf();
    for m in 0..out.n_paths() {
        for (k, (x, t)) in out.path(m).iter().zip(out.times()).enumerate() {
            let want = x_inf + (5.0 - x_inf) * (-config.lambda * t).exp();
            assert!((x - want).abs() <= 1e-10, "path {m} step {k}: {x} vs {want}");
        }
    }
}

#[test]
fn seeded_runs_reproduce_bitwise() {
    let mut config = flat_config();
    config.kernel = KernelSpec::Fractional { alpha: 1.3 };
    config.grid = TimeGrid::new(1.0, 30).unwrap();
    config.paths = 8;
    let first = run(&config);
    let second = run(&config);
    assert_eq!(first.values(), second.values());

    config.seed = 43;
    let third = run(&config);
    assert_ne!(first.values(), third.values());
}

#[test]
fn thread_count_does_not_change_results() {
    let mut config = flat_config();
    config.kernel = KernelSpec::Fractional { alpha: 0.9 };
    config.grid = TimeGrid::new(1.0, 40).unwrap();
    config.paths = 32;
    let serial = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| run(&config));
    let parallel = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(|| run(&config));
    assert_eq!(serial.values(), parallel.values());
    assert_eq!(serial.sigma_clamps(), parallel.sigma_clamps());
}

#[test]
fn flat_kernel_variance_tracks_the_closed_form() {
    let mut config = flat_config();
    config.paths = 20000;
    let out = run(&config);
    let m = config.paths as f64;
    let c = config.c;
    let sigma_sq = 0.25;

    for k in 1..=config.grid.n() {
        let t = out.times()[k];
        let mean: f64 = (0..config.paths).map(|p| out.path(p)[k]).sum::<f64>() / m;
        let var: f64 = (0..config.paths)
            .map(|p| (out.path(p)[k] - mean).powi(2))
            .sum::<f64>()
            / (m - 1.0);
        let target = c * sigma_sq * (1.0 - (-2.0 * config.lambda * t).exp());
        let band = 4.0 * target * (2.0 / (m - 1.0)).sqrt();
        assert!(
            (var - target).abs() <= band,
            "step {k}: var {var} vs {target} (band {band})"
        );
        // the starting point is pinned, so the mean sits at x_inf exactly
        let mean_band = 4.0 * (var / m).sqrt();
        assert!((mean - config.x_inf()).abs() <= mean_band, "step {k}: mean {mean}");
    }
}

#[test]
fn coupled_members_share_their_noise() {
    // With a state-free diffusion both members scatter identical noise, so
    // the pathwise gap contracts on the resolvent without any randomness.
    let mut first = flat_config();
    first.kernel = KernelSpec::Fractional { alpha: 0.9 };
    first.grid = TimeGrid::new(2.0, 60).unwrap();
    first.paths = 16;
    first.initial = InitialLaw::Point { value: 5.0 };
    let mut second = first.clone();
    second.initial = InitialLaw::Point { value: 10.0 };

    let table = build_resolvent(&first.kernel, first.lambda, &first.grid).unwrap();
    let stab = Stabilizer::build(&table, first.c).unwrap();
    let (a, b) = simulate_coupled(&first, &second, &table, &stab).unwrap();

    let r = table.r_values();
    for m in 0..first.paths {
        for k in 0..=first.grid.n() {
            let gap = a.path(m)[k] - b.path(m)[k];
            let want = -5.0 * r[k];
            assert!(
                (gap - want).abs() <= 1e-12 * (1.0 + want.abs()),
                "path {m} step {k}: gap {gap} vs {want}"
            );
        }
    }
}

#[test]
fn coupled_rejects_configs_differing_beyond_the_start() {
    let first = flat_config();
    let mut second = first.clone();
    second.initial = InitialLaw::Point { value: 4.0 };
    second.c = 0.2;
    let table = build_resolvent(&first.kernel, first.lambda, &first.grid).unwrap();
    let stab = Stabilizer::build(&table, first.c).unwrap();
    assert!(matches!(
        simulate_coupled(&first, &second, &table, &stab),
        Err(Error::Mismatch(_))
    ));
}

#[test]
fn mismatched_table_is_rejected() {
    let config = flat_config();
    let other_grid = TimeGrid::new(1.0, 60).unwrap();
    let table = build_resolvent(&config.kernel, config.lambda, &other_grid).unwrap();
    let stab = Stabilizer::build(&table, config.c).unwrap();
    assert!(matches!(
        simulate(&config, &table, &stab),
        Err(Error::Mismatch(_))
    ));

    let table = build_resolvent(&config.kernel, 0.3, &config.grid).unwrap();
    let stab = Stabilizer::build(&table, config.c).unwrap();
    assert!(matches!(
        simulate(&config, &table, &stab),
        Err(Error::Mismatch(_))
    ));
}

#[test]
fn degenerate_diffusion_pins_paths_below_the_cusp() {
    let mut config = flat_config();
    config.diffusion = DiffusionSpec::TanhDegenerate { center: 12.0 };
    config.initial = InitialLaw::Point { value: 10.0 };
    config.paths = 4;
    let out = run(&config);
    // x stays at x_inf = 10 < 12, so the diffusion clamps at every step
    assert_eq!(out.sigma_clamps(), (config.paths * config.grid.n()) as u64);
    for m in 0..config.paths {
        for x in out.path(m) {
            assert!((x - 10.0).abs() <= 1e-10);
        }
    }
}

#[test]
fn centered_moments_stay_inside_the_contraction_bound() {
    let mut config = flat_config();
    config.kernel = KernelSpec::Fractional { alpha: 0.9 };
    config.grid = TimeGrid::new(1.0, 60).unwrap();
    config.diffusion = DiffusionSpec::Trinomial {
        kappa0: 0.16,
        kappa1: 0.0,
        kappa2: 1.0,
        center: 10.0,
    };
    config.paths = 500;
    let out = run(&config);
    // sqrt(c) kappa = 0.6 < 1 gives the second-moment bound
    // (sqrt(c) sigma(x_inf) / (1 - sqrt(c kappa2)))^2 = 0.36.
    let bound = 1.2 * 0.36;
    let m = config.paths as f64;
    for k in 0..=config.grid.n() {
        let sq: f64 = (0..config.paths)
            .map(|p| (out.path(p)[k] - 10.0).powi(2))
            .sum::<f64>()
            / m;
        assert!(sq <= bound, "step {k}: centered second moment {sq}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn coupled_flat_gap_follows_the_resolvent(
        lambda in 0.1_f64..1.5,
        x_a in -5.0_f64..5.0,
        x_b in -5.0_f64..5.0,
        seed in 0u64..1000,
    ) {
        let mut first = flat_config();
        first.lambda = lambda;
        first.grid = TimeGrid::new(1.0, 20).unwrap();
        first.paths = 4;
        first.seed = seed;
        first.initial = InitialLaw::Point { value: x_a };
        let mut second = first.clone();
        second.initial = InitialLaw::Point { value: x_b };

        let table = build_resolvent(&first.kernel, lambda, &first.grid).unwrap();
        let stab = Stabilizer::build(&table, first.c).unwrap();
        let (a, b) = simulate_coupled(&first, &second, &table, &stab).unwrap();
        for m in 0..first.paths {
            for k in 0..=first.grid.n() {
                let gap = a.path(m)[k] - b.path(m)[k];
                let want = (x_a - x_b) * (-lambda * a.times()[k]).exp();
                prop_assert!((gap - want).abs() <= 1e-9 * (1.0 + want.abs()));
            }
        }
    }
}
