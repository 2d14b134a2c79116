use crate::{convolve, Error, KernelSpec, PowerLaw, Result, TimeGrid, ALPHA_ONE_EPS};
use specfun::{
    f_fractional, f_gamma, f_smooth_factor, gamma_fn, gauss_jacobi_unit, gauss_legendre_unit,
    mittag_leffler,
};

const ML_TOL: f64 = 1e-12;

/// Resolvent pair of a kernel and speed, sampled on a uniform grid.
///
/// `r_values[k]` holds `R(t_k)` and `f_values[k]` holds `f(t_k) = -R'(t_k)`.
/// For kernels singular at the origin `f(0)` does not exist; the origin slot
/// then stores the first-cell midpoint surrogate `f(dt/2)` (or 0 when the
/// order exceeds 1, where `f(0+) = 0`). Consumers integrating against
/// `f_values` treat the first cell through [`ResolventTable::f_singularity`].
///
/// Tables are always stored in normalized form: an overall kernel scale is
/// folded into `lambda` before construction.
#[derive(Debug, Clone)]
pub struct ResolventTable {
    spec: KernelSpec,
    lambda: f64,
    grid: TimeGrid,
    r_values: Vec<f64>,
    f_values: Vec<f64>,
    tail_a: f64,
    f_l2_sq: f64,
}

impl ResolventTable {
    /// Assembles a table from externally computed parts.
    ///
    /// Accepts `lambda = 0` (degenerate deterministic-memory case, `R == 1`,
    /// `f == 0`, `tail_a = 1`), which [`build_resolvent`] does not produce.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        spec: KernelSpec,
        lambda: f64,
        grid: TimeGrid,
        r_values: Vec<f64>,
        f_values: Vec<f64>,
        tail_a: f64,
        f_l2_sq: f64,
    ) -> Result<Self> {
        spec.validate()?;
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::Domain("resolvent table needs lambda >= 0"));
        }
        if r_values.len() != grid.len() || f_values.len() != grid.len() {
            return Err(Error::Shape("resolvent table needs n + 1 samples of R and f"));
        }
        if (r_values[0] - 1.0).abs() > 1e-12 {
            return Err(Error::Domain("R(0) must equal 1"));
        }
        if r_values.iter().chain(f_values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("resolvent samples must be finite"));
        }
        if !(tail_a.is_finite() && (0.0..=1.0).contains(&tail_a)) {
            return Err(Error::Domain("tail_a must lie in [0, 1]"));
        }
        if !(f_l2_sq.is_finite() && f_l2_sq >= 0.0) {
            return Err(Error::Domain("f_l2_sq must be nonnegative"));
        }
        Ok(ResolventTable { spec, lambda, grid, r_values, f_values, tail_a, f_l2_sq })
    }

    /// Normalized kernel the table was built for.
    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    /// Normalized speed parameter.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Sampling grid.
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Samples of `R` at the grid points.
    pub fn r_values(&self) -> &[f64] {
        &self.r_values
    }

    /// Samples of `f` at the grid points (origin slot as documented on the type).
    pub fn f_values(&self) -> &[f64] {
        &self.f_values
    }

    /// Limit `R(inf)`; positive only for integrable (tilted) kernels.
    pub fn tail_a(&self) -> f64 {
        self.tail_a
    }

    /// Squared L2 norm of `f` over `(0, inf)`.
    pub fn f_l2_sq(&self) -> f64 {
        self.f_l2_sq
    }

    /// Power-law behaviour of `f` at the origin, `f(u) ~ coeff * u^(exponent-1)`.
    pub fn f_singularity(&self) -> Option<PowerLaw> {
        match self.spec {
            KernelSpec::Constant { .. } => None,
            KernelSpec::Fractional { alpha } | KernelSpec::Gamma { alpha, .. } => {
                if (alpha - 1.0).abs() < ALPHA_ONE_EPS || self.lambda == 0.0 {
                    None
                } else {
                    // f = lambda * K * (1 - ...) locally, so the lead coefficient
                    // is lambda * b / Gamma(alpha) with b already folded into lambda.
                    Some(PowerLaw {
                        exponent: alpha,
                        coeff: self.lambda / gamma_fn(alpha).expect("alpha in (1/2,3/2)"),
                    })
                }
            }
        }
    }

    /// Evaluates `f` off-grid.
    ///
    /// `t = 0` is accepted only where `f(0+)` is finite.
    pub fn f_at(&self, t: f64) -> Result<f64> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::Domain("f argument must be >= 0"));
        }
        if self.lambda == 0.0 {
            return Ok(0.0);
        }
        match self.spec {
            KernelSpec::Constant { level } => {
                let rate = self.lambda * level;
                Ok(rate * (-rate * t).exp())
            }
            KernelSpec::Fractional { alpha } => {
                if t == 0.0 {
                    return f_origin_value(alpha, self.lambda);
                }
                Ok(f_fractional(alpha, self.lambda, t)?)
            }
            KernelSpec::Gamma { alpha, rho, .. } => {
                if t == 0.0 {
                    return f_origin_value(alpha, self.lambda);
                }
                Ok(f_gamma(alpha, rho, self.lambda, t)?)
            }
        }
    }

    /// Evaluates the smooth factor `S(t) = f(t) / t^(alpha-1)`, finite at 0.
    ///
    /// For the constant kernel (order 1) this is `f` itself.
    pub fn f_smooth_at(&self, t: f64) -> Result<f64> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::Domain("smooth factor argument must be >= 0"));
        }
        if self.lambda == 0.0 {
            return Ok(0.0);
        }
        match self.spec {
            KernelSpec::Constant { level } => {
                let rate = self.lambda * level;
                Ok(rate * (-rate * t).exp())
            }
            KernelSpec::Fractional { alpha } => Ok(f_smooth_factor(alpha, self.lambda, t)?),
            KernelSpec::Gamma { alpha, rho, .. } => {
                Ok((-rho * t).exp() * f_smooth_factor(alpha, self.lambda, t)?)
            }
        }
    }

    /// Cell masses of `f^2`: entry `m` holds the integral of `f(u)^2` over
    /// the grid cell `(m dt, (m+1) dt)`.
    ///
    /// Smooth cells use a fixed Gauss-Legendre rule; a power law at the
    /// origin is rescaled onto the unit interval and resolved by the same
    /// weighted panels as the global norm, so every mass is accurate to
    /// near machine precision. These equal the per-cell gains a sampler
    /// realizes when it draws exact Gaussian convolution increments, which
    /// makes them the consistent quadrature weights for grid solves that
    /// must reproduce sampled variances.
    pub fn f_sq_cells(&self) -> Result<Vec<f64>> {
        let n = self.grid.n();
        let dt = self.grid.dt();
        let mut cells = vec![0.0; n];
        if self.lambda == 0.0 {
            return Ok(cells);
        }
        let start = match self.f_singularity() {
            Some(power) => {
                let a = power.exponent;
                cells[0] =
                    dt.powf(2.0 * a - 1.0) * head_l2(a, |v| self.f_smooth_at(dt * v))?;
                1
            }
            None => 0,
        };
        let leg = gauss_legendre_unit(16);
        for (m, slot) in cells.iter_mut().enumerate().skip(start) {
            let mut acc = 0.0;
            for (x, w) in leg.nodes.iter().zip(&leg.weights) {
                let v = self.f_at(dt * (m as f64 + x))?;
                acc += w * v * v;
            }
            *slot = dt * acc;
        }
        Ok(cells)
    }
}

fn f_origin_value(alpha: f64, lambda: f64) -> Result<f64> {
    if (alpha - 1.0).abs() < ALPHA_ONE_EPS {
        Ok(lambda)
    } else if alpha > 1.0 {
        Ok(0.0)
    } else {
        Err(Error::Domain("f diverges at 0 for orders below 1"))
    }
}

/// Builds the resolvent table of `(spec, lambda)` on `grid`.
pub fn build_resolvent(spec: &KernelSpec, lambda: f64, grid: &TimeGrid) -> Result<ResolventTable> {
    spec.validate()?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Domain("build_resolvent needs lambda > 0"));
    }
    let (nspec, lam) = spec.normalized(lambda);
    match nspec {
        KernelSpec::Constant { level } => {
            let rate = lam * level;
            exponential_table(nspec.clone(), lam, rate, grid)
        }
        KernelSpec::Fractional { alpha } if (alpha - 1.0).abs() < ALPHA_ONE_EPS => {
            // K degenerates to the unit constant kernel.
            exponential_table(nspec.clone(), lam, lam, grid)
        }
        KernelSpec::Fractional { alpha } => {
            let n = grid.n();
            let dt = grid.dt();
            let mut r = Vec::with_capacity(n + 1);
            r.push(1.0);
            for k in 1..=n {
                let t = grid.point(k);
                r.push(mittag_leffler(alpha, -lam * t.powf(alpha), ML_TOL)?);
            }
            let mut f = Vec::with_capacity(n + 1);
            f.push(if alpha < 1.0 { f_fractional(alpha, lam, 0.5 * dt)? } else { 0.0 });
            for k in 1..=n {
                f.push(f_fractional(alpha, lam, grid.point(k))?);
            }
            let l2 = fractional_l2_sq(alpha, lam)?;
            ResolventTable::from_parts(nspec, lam, *grid, r, f, 0.0, l2)
        }
        KernelSpec::Gamma { alpha, rho, .. } => {
            let n = grid.n();
            let dt = grid.dt();
            let smooth = |u: f64| -> Result<f64> {
                Ok((-rho * u).exp() * f_smooth_factor(alpha, lam, u)?)
            };

            let mut f = Vec::with_capacity(n + 1);
            let origin = if (alpha - 1.0).abs() < ALPHA_ONE_EPS {
                lam
            } else if alpha < 1.0 {
                f_gamma(alpha, rho, lam, 0.5 * dt)?
            } else {
                0.0
            };
            f.push(origin);
            for k in 1..=n {
                f.push(f_gamma(alpha, rho, lam, grid.point(k))?);
            }

            // R by cumulative integration of f. The first cell carries the
            // full singularity, so it gets a weighted rule; later cells are
            // smooth and a trapezoid suffices.
            let jac = gauss_jacobi_unit(16, alpha - 1.0)?;
            let mut cell1 = 0.0;
            for (x, w) in jac.nodes.iter().zip(&jac.weights) {
                cell1 += w * smooth(dt * x)?;
            }
            cell1 *= dt.powf(alpha);
            let mut r = Vec::with_capacity(n + 1);
            r.push(1.0);
            if n >= 1 {
                r.push(1.0 - cell1);
            }
            for k in 2..=n {
                let cell = 0.5 * (f[k - 1] + f[k]) * dt;
                r.push(r[k - 1] - cell);
            }

            let tail_a = rho.powf(alpha) / (rho.powf(alpha) + lam);
            let l2 = gamma_l2_sq(alpha, rho, lam)?;
            ResolventTable::from_parts(nspec, lam, *grid, r, f, tail_a, l2)
        }
    }
}

fn exponential_table(
    spec: KernelSpec,
    lambda: f64,
    rate: f64,
    grid: &TimeGrid,
) -> Result<ResolventTable> {
    let n = grid.n();
    let mut r = Vec::with_capacity(n + 1);
    let mut f = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let e = (-rate * grid.point(k)).exp();
        r.push(e);
        f.push(rate * e);
    }
    ResolventTable::from_parts(spec, lambda, *grid, r, f, 0.0, 0.5 * rate)
}

/// Integral of `u^(2 alpha - 2) w(u)^2` over `[0, 1]` for smooth `w`.
///
/// The smooth factor carries `u^alpha` power terms, so a fixed weighted rule
/// converges poorly; geometric panels toward the origin resolve both the
/// endpoint power law and those terms. Below `eps` the leading power is
/// integrated in closed form.
fn head_l2<W: Fn(f64) -> Result<f64>>(alpha: f64, w: W) -> Result<f64> {
    let leg = gauss_legendre_unit(16);
    let eps = 2.0_f64.powi(-60);
    let w0 = w(0.0)?;
    let mut acc = w0 * w0 * eps.powf(2.0 * alpha - 1.0) / (2.0 * alpha - 1.0);
    let mut a = eps;
    while a < 1.0 {
        let b = (2.0 * a).min(1.0);
        for (x, wt) in leg.nodes.iter().zip(&leg.weights) {
            let u = a + (b - a) * x;
            let s = w(u)?;
            acc += wt * (b - a) * u.powf(2.0 * alpha - 2.0) * s * s;
        }
        a = b;
    }
    Ok(acc)
}

/// `||f||_2^2` for the pure power-law kernel.
///
/// Scaling collapses the speed: `f_{alpha,lambda}(t) = tau f_{alpha,1}(tau t)`
/// with `tau = lambda^(1/alpha)`, hence the norm scales by `tau`.
fn fractional_l2_sq(alpha: f64, lambda: f64) -> Result<f64> {
    let tau = lambda.powf(1.0 / alpha);
    let mut acc = head_l2(alpha, |u| Ok(f_smooth_factor(alpha, 1.0, u)?))?;

    // dyadic panels to 1024, then the algebraic tail
    let leg = gauss_legendre_unit(16);
    let mut a = 1.0;
    let t_end = 1024.0_f64;
    while a < t_end {
        let b = 2.0 * a;
        for (x, w) in leg.nodes.iter().zip(&leg.weights) {
            let v = f_fractional(alpha, 1.0, a + (b - a) * x)?;
            acc += w * (b - a) * v * v;
        }
        a = b;
    }
    // f_{alpha,1}(t) ~ c1 t^(-alpha-1) far out
    let c1 = alpha * specfun::recip_gamma(1.0 - alpha).abs();
    acc += c1 * c1 * t_end.powf(-2.0 * alpha - 1.0) / (2.0 * alpha + 1.0);

    Ok(tau * acc)
}

/// `||f||_2^2` for the tilted kernel; the tilt makes the tail exponential.
fn gamma_l2_sq(alpha: f64, rho: f64, lambda: f64) -> Result<f64> {
    // rho = 0 is normalized away before this point
    debug_assert!(rho > 0.0);
    let mut acc =
        head_l2(alpha, |u| Ok((-rho * u).exp() * f_smooth_factor(alpha, lambda, u)?))?;

    let leg = gauss_legendre_unit(16);
    let mut a = 1.0_f64;
    loop {
        let b = 2.0 * a;
        let mut panel = 0.0;
        for (x, w) in leg.nodes.iter().zip(&leg.weights) {
            let v = f_gamma(alpha, rho, lambda, a + (b - a) * x)?;
            panel += w * (b - a) * v * v;
        }
        acc += panel;
        a = b;
        if (panel < 1e-16 * acc.max(1e-300) && b >= 4.0) || b > 1e7 {
            break;
        }
    }
    // remaining mass decays like exp(-2 rho t)
    let fb = f_gamma(alpha, rho, lambda, a)?;
    acc += fb * fb / (2.0 * rho);
    Ok(acc)
}

fn kernel_samples(spec: &KernelSpec, grid: &TimeGrid) -> Result<(Vec<f64>, Option<PowerLaw>)> {
    let n = grid.n();
    let mut kv = vec![0.0; n + 1];
    for (k, slot) in kv.iter_mut().enumerate().skip(1) {
        *slot = spec.eval(grid.point(k))?;
    }
    let sing = spec.singularity();
    if sing.is_none() {
        // bounded at the origin: record K(0+) for the midpoint rule
        kv[0] = match *spec {
            KernelSpec::Constant { level } => level,
            KernelSpec::Fractional { alpha } => 1.0 / gamma_fn(alpha)?,
            KernelSpec::Gamma { b, alpha, .. } => b / gamma_fn(alpha)?,
        };
    }
    Ok((kv, sing))
}

/// Sup-norm residual of `R + lambda * (K * R) - 1` over the grid.
///
/// The constant kernel admits an exact cumulative form of the convolution,
/// so its residual reflects only rounding; singular kernels go through the
/// midpoint convolution and inherit its discretization error.
pub fn resolvent_residual(table: &ResolventTable) -> Result<f64> {
    let lam = table.lambda;
    let r = &table.r_values;
    match table.spec {
        KernelSpec::Constant { level } => {
            let mut worst = 0.0_f64;
            for (k, rv) in r.iter().enumerate() {
                // (K * R)(t) = level * integral of R = (1 - R) / lambda for lambda > 0
                let conv =
                    if lam > 0.0 { (1.0 - rv) / lam } else { level * table.grid.point(k) };
                worst = worst.max((rv + lam * conv - 1.0).abs());
            }
            Ok(worst)
        }
        _ => {
            let (kv, sing) = kernel_samples(&table.spec, &table.grid)?;
            let conv = convolve(&kv, sing.as_ref(), r, &table.grid)?;
            let mut worst = 0.0_f64;
            for k in 1..r.len() {
                worst = worst.max((r[k] + lam * conv[k] - 1.0).abs());
            }
            Ok(worst)
        }
    }
}

/// Sup-norm residual of `f + lambda * (K * f) - lambda * K` over the grid.
pub fn check_f_identity(table: &ResolventTable) -> Result<f64> {
    let lam = table.lambda;
    let f = &table.f_values;
    let n = table.grid.n();
    match table.spec {
        KernelSpec::Constant { level } => {
            // (K * f)(t) = level * (1 - R(t)) exactly
            let mut worst = 0.0_f64;
            for k in 1..=n {
                let lhs = f[k] + lam * level * (1.0 - table.r_values[k]);
                worst = worst.max((lhs - lam * level).abs());
            }
            Ok(worst)
        }
        _ => {
            let (kv, sing) = kernel_samples(&table.spec, &table.grid)?;
            let conv = convolve(&kv, sing.as_ref(), f, &table.grid)?;
            let mut worst = 0.0_f64;
            for k in 1..=n {
                worst = worst.max((f[k] + lam * conv[k] - lam * kv[k]).abs());
            }
            Ok(worst)
        }
    }
}
