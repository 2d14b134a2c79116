//! Master covariance assembly against closed forms and refined quadrature.

use kernel::{build_resolvent, KernelSpec, TimeGrid};
use sde::{assemble_covariance, ldl_factorize};
use specfun::gauss_legendre_unit;

/// Integral of `g` over `(0, 1]` by dyadic panels, resolving an integrable
/// power-law singularity at the origin to near machine precision.
fn dyadic_integral(g: impl Fn(f64) -> f64) -> f64 {
    let gl = gauss_legendre_unit(16);
    let mut total = 0.0;
    for j in 0..220 {
        let hi = 0.5_f64.powi(j);
        let lo = 0.5 * hi;
        let width = hi - lo;
        let mut acc = 0.0;
        for (w, x) in gl.weights.iter().zip(&gl.nodes) {
            acc += w * g(lo + width * x);
        }
        total += acc * width;
    }
    total
}

#[test]
fn constant_kernel_entries_match_closed_form() {
    let grid = TimeGrid::new(1.0, 10).unwrap();
    let dt = grid.dt();
    let lambda = 0.7;
    let table = build_resolvent(&KernelSpec::Constant { level: 1.0 }, lambda, &grid).unwrap();
    let c = assemble_covariance(&table, &grid).unwrap();

    assert_eq!(c.get(0, 0), dt);
    for i in 0..10 {
        let ti = dt * i as f64;
        let border = (-lambda * ti).exp() - (-lambda * (ti + dt)).exp();
        let got = c.get(0, 1 + i);
        assert!(
            (got - border).abs() <= 1e-10 * border,
            "border {i}: {got} vs {border}"
        );
        for j in 0..=i {
            let exact = lambda * (-lambda * dt * (i + j) as f64).exp()
                * (1.0 - (-2.0 * lambda * dt).exp())
                / 2.0;
            let got = c.get(1 + i, 1 + j);
            assert!(
                (got - exact).abs() <= 1e-10 * exact,
                "entry ({i},{j}): {got} vs {exact}"
            );
        }
    }
}

#[test]
fn singular_first_cell_matches_refined_quadrature() {
    let lambda = 0.2;
    let grid = TimeGrid::new(1.0, 200).unwrap();
    let dt = grid.dt();
    let specs = [
        KernelSpec::Fractional { alpha: 0.65 },
        KernelSpec::Fractional { alpha: 0.9 },
        KernelSpec::Fractional { alpha: 1.3 },
        KernelSpec::Gamma { b: 1.0, alpha: 0.9, rho: 1.2 },
    ];
    for spec in &specs {
        let table = build_resolvent(spec, lambda, &grid).unwrap();
        let c = assemble_covariance(&table, &grid).unwrap();

        let f = |t: f64| table.f_at(t).unwrap();
        let border = dt * dyadic_integral(|v| f(dt * v));
        let diag = dt * dyadic_integral(|v| f(dt * v) * f(dt * v));
        let mixed_1 = dt * dyadic_integral(|v| f(dt * v) * f(dt * (1.0 + v)));
        let mixed_6 = dt * dyadic_integral(|v| f(dt * v) * f(dt * (6.0 + v)));

        for (got, want, name) in [
            (c.get(0, 1), border, "border"),
            (c.get(1, 1), diag, "diagonal"),
            (c.get(1, 2), mixed_1, "offset 1"),
            (c.get(1, 7), mixed_6, "offset 6"),
        ] {
            assert!(
                (got - want).abs() <= 1e-9 * want.abs(),
                "{spec:?} {name}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn border_column_telescopes_the_resolvent() {
    // integral of f over [t_i, t_(i+1)] equals R(t_i) - R(t_(i+1)), which the
    // table computes through an entirely different route.
    let grid = TimeGrid::new(2.0, 40).unwrap();
    let cases = [
        (KernelSpec::Constant { level: 1.3 }, 0.7),
        (KernelSpec::Fractional { alpha: 0.75 }, 0.4),
        (KernelSpec::Fractional { alpha: 1.3 }, 0.8),
    ];
    for (spec, lambda) in &cases {
        let table = build_resolvent(spec, *lambda, &grid).unwrap();
        let c = assemble_covariance(&table, &grid).unwrap();
        let r = table.r_values();
        let scale = 1.0 - r[grid.n()];
        for i in 0..grid.n() {
            let want = r[i] - r[i + 1];
            let got = c.get(0, 1 + i);
            assert!(
                (got - want).abs() <= 1e-9 * scale,
                "{spec:?} cell {i}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn factorization_is_clean_across_kernels() {
    let grid = TimeGrid::new(1.0, 200).unwrap();
    let cases = [
        (KernelSpec::Constant { level: 1.0 }, 0.2),
        (KernelSpec::Fractional { alpha: 0.9 }, 0.2),
        (KernelSpec::Fractional { alpha: 1.3 }, 0.2),
        (KernelSpec::Gamma { b: 1.0, alpha: 1.3, rho: 1.2 }, 0.2),
    ];
    for (spec, lambda) in &cases {
        let table = build_resolvent(spec, *lambda, &grid).unwrap();
        let c = assemble_covariance(&table, &grid).unwrap();
        let f = ldl_factorize(&c).unwrap_or_else(|e| panic!("{spec:?}: {e}"));
        assert!(f.diag().iter().all(|d| *d >= 0.0));
        let err = f.reconstruction_error(&c);
        let bound = 1e-10 * c.max_abs();
        assert!(err <= bound, "{spec:?}: reconstruction {err} > {bound}");
    }
}

#[test]
fn leading_subfactor_equals_prefix_of_full_factor() {
    // Same step size, half the horizon: the smaller covariance is the leading
    // block of the larger one, and the factor rows must agree bit for bit so
    // one factorization can serve every step of the recursion.
    let lambda = 0.2;
    let spec = KernelSpec::Fractional { alpha: 0.9 };
    let long = TimeGrid::new(1.0, 40).unwrap();
    let short = TimeGrid::new(0.5, 20).unwrap();
    assert_eq!(long.dt(), short.dt());

    let table_long = build_resolvent(&spec, lambda, &long).unwrap();
    let table_short = build_resolvent(&spec, lambda, &short).unwrap();
    let c_long = assemble_covariance(&table_long, &long).unwrap();
    let c_short = assemble_covariance(&table_short, &short).unwrap();

    for i in 0..c_short.dim() {
        for j in 0..c_short.dim() {
            assert_eq!(c_short.get(i, j), c_long.get(i, j), "entry ({i},{j})");
        }
    }

    let f_long = ldl_factorize(&c_long).unwrap();
    let f_short = ldl_factorize(&c_short).unwrap();
    for i in 0..c_short.dim() {
        assert_eq!(f_short.unit_row(i), f_long.unit_row(i), "unit row {i}");
        assert_eq!(f_short.scaled_row(i), f_long.scaled_row(i), "scaled row {i}");
        assert_eq!(f_short.diag()[i], f_long.diag()[i], "pivot {i}");
    }
}
