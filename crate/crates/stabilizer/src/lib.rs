//! Variance stabilizer of convolutive Volterra models.
//!
//! A model with resolvent pair `(R, f)`, speed `lambda` and vol-of-vol
//! fraction `c` admits a stationary-variance profile only if the noise is
//! modulated by the deterministic factor `sigma2` solving
//!
//! ```text
//! c * lambda^2 * (1 - R(t)^2) = (f^2 * sigma2)(t)
//! ```
//!
//! This crate evaluates that profile three ways:
//!
//! * [`SeriesStabilizer`]: a power series in `lambda * t^alpha` for the pure
//!   power-law kernel, exact where it converges cleanly;
//! * [`stabilizer_discrete`]: a forward Volterra solve on a grid, available
//!   for every kernel;
//! * [`stabilizer_asymptote`]: the long-run limit
//!   `c * lambda^2 * (1 - a^2) / ||f||^2`.
//!
//! [`Stabilizer::build`] picks the best route for a given table and samples
//! the profile on the table's grid.

use kernel::{KernelSpec, ResolventTable};
use specfun::gamma_fn;

/// Errors from stabilizer construction and evaluation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter is outside the supported domain.
    #[error("domain error: {0}")]
    Domain(&'static str),
    /// The series argument is too large for reliable summation.
    #[error("series argument {x:.3} exceeds the reliable range")]
    SeriesRange {
        /// Scaled time `lambda^(1/alpha) * t`.
        x: f64,
    },
    /// Alternating-term cancellation consumed the working precision.
    #[error("series cancellation: largest term {max_term:.3e} against sum {sum:.3e}")]
    PrecisionLoss {
        /// Largest term magnitude encountered.
        max_term: f64,
        /// Value the series summed to.
        sum: f64,
    },
    /// A coefficient escaped its geometric growth envelope.
    #[error("coefficient {index} escaped the growth envelope")]
    CoefficientGrowth {
        /// Index of the offending coefficient.
        index: usize,
    },
    /// The leading diagonal weight of the forward solve underflowed.
    #[error("forward solve pivot underflowed")]
    PivotUnderflow,
    /// An underlying kernel operation failed.
    #[error(transparent)]
    Kernel(#[from] kernel::Error),
    /// An underlying special-function evaluation failed.
    #[error(transparent)]
    Special(#[from] specfun::Error),
}

/// Alias for results in this crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Largest scaled time `x = lambda^(1/alpha) * t` the series route accepts.
const X_SWITCH: f64 = 25.0;

/// Terms kept by the series route.
const SERIES_TERMS: usize = 61;

fn check_order(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.5 && alpha < 1.5) {
        return Err(Error::Domain("series order must lie in (1/2, 3/2)"));
    }
    Ok(())
}

fn check_fraction(c: f64) -> Result<()> {
    if !(c.is_finite() && (0.0..1.0).contains(&c)) {
        return Err(Error::Domain("vol-of-vol fraction must lie in [0, 1)"));
    }
    Ok(())
}

/// Scaled series coefficients `c_k * Gamma(alpha (k - 1) + 2)`.
///
/// The plain coefficients decay super-geometrically and underflow long
/// before the recurrence runs out; this scaling keeps every value in a
/// comfortable range.
///
/// Accuracy caveat: the forward recurrence amplifies rounding noise by
/// roughly a factor 3 per index (the denominator series has a zero inside
/// the unit disk), so values are at full precision for small `k` and
/// condition-limited beyond `k` around 25. The enforced envelope
/// `10 * K * (2^(alpha+2))^k` has a per-step base comfortably above the
/// amplification factor, so legitimate noise never trips the guard; only a
/// logic error or a wild parameter can. Consumers weight coefficient `k` by
/// `x^(alpha k)`, and the evaluation-range checks keep `x` small enough
/// that the noisy tail stays far below the result.
pub fn ck_scaled(alpha: f64, count: usize) -> Result<Vec<f64>> {
    check_order(alpha)?;
    if count == 0 || count > 100 {
        return Err(Error::Domain("coefficient count must lie in 1..=100"));
    }

    // building blocks of the matched power expansions
    let a: Vec<f64> = (0..count)
        .map(|k| Ok(1.0 / gamma_fn(alpha * k as f64 + 1.0)?))
        .collect::<Result<_>>()?;
    let b: Vec<f64> = (0..count)
        .map(|k| Ok(1.0 / gamma_fn(alpha * (k as f64 + 1.0))?))
        .collect::<Result<_>>()?;
    let conv = |u: &[f64], v: &[f64], k: usize| -> f64 {
        (0..=k).map(|i| u[i] * v[k - i]).sum()
    };

    let mut a_til = Vec::with_capacity(count);
    let mut b_til = Vec::with_capacity(count);
    for k in 0..count {
        a_til.push(gamma_fn(alpha * (k as f64 + 1.0))? * conv(&a, &b, k));
        b_til.push(gamma_fn(alpha * (k as f64 + 2.0) - 1.0)? * conv(&b, &b, k));
    }

    let mut ct = Vec::with_capacity(count);
    ct.push(gamma_fn(alpha)?.powi(2) / gamma_fn(2.0 * alpha - 1.0)?);

    let growth_base = 2f64.powf(alpha + 2.0);
    let growth_scale = 10.0 * ct[0].abs().max(1.0);
    let mut envelope = growth_scale;
    for k in 1..count {
        let mut acc = a_til[k];
        for l in 1..=k {
            acc -= b_til[l] * ct[k - l];
        }
        let v = acc / b_til[0];
        envelope *= growth_base;
        if !v.is_finite() || v.abs() > envelope {
            return Err(Error::CoefficientGrowth { index: k });
        }
        ct.push(v);
    }
    Ok(ct)
}

/// Plain series coefficients `c_k` of the small-time expansion
/// `sigma2(t) = 2 c lambda t^(1-alpha) * sum_k (-1)^k c_k (lambda t^alpha)^k`.
pub fn ck_coefficients(alpha: f64, count: usize) -> Result<Vec<f64>> {
    let ct = ck_scaled(alpha, count)?;
    ct.iter()
        .enumerate()
        .map(|(k, v)| Ok(v / gamma_fn(alpha * (k as f64 - 1.0) + 2.0)?))
        .collect()
}

/// Series evaluator of the stabilizer for the pure power-law kernel.
#[derive(Debug, Clone)]
pub struct SeriesStabilizer {
    alpha: f64,
    lambda: f64,
    c: f64,
    coeffs: Vec<f64>,
}

impl SeriesStabilizer {
    /// Prepares the coefficient table for `(alpha, lambda, c)`.
    pub fn new(alpha: f64, lambda: f64, c: f64) -> Result<Self> {
        check_order(alpha)?;
        check_fraction(c)?;
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::Domain("series stabilizer needs lambda >= 0"));
        }
        let coeffs = ck_coefficients(alpha, SERIES_TERMS)?;
        Ok(SeriesStabilizer { alpha, lambda, c, coeffs })
    }

    /// Stabilizer value at `t >= 0`.
    ///
    /// At `t = 0` the value follows the power `t^(1-alpha)`: zero below
    /// order 1, infinite above. Arguments with `lambda^(1/alpha) t` beyond
    /// the reliable range are rejected rather than summed badly.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::Domain("stabilizer argument must be >= 0"));
        }
        let (alpha, lambda) = (self.alpha, self.lambda);
        if t == 0.0 {
            return Ok(if alpha > 1.0 && lambda > 0.0 && self.c > 0.0 {
                f64::INFINITY
            } else if (alpha - 1.0).abs() < 1e-12 {
                2.0 * self.c * lambda * self.coeffs[0]
            } else {
                0.0
            });
        }
        let x = lambda.powf(1.0 / alpha) * t;
        if x > X_SWITCH {
            return Err(Error::SeriesRange { x });
        }
        let xa = -x.powf(alpha);
        let mut sum = 0.0;
        let mut term = 1.0;
        let mut max_term = 0.0_f64;
        for ck in &self.coeffs {
            let contrib = ck * term;
            max_term = max_term.max(contrib.abs());
            sum += contrib;
            term *= xa;
        }
        if max_term > 1e6 * sum.abs() {
            return Err(Error::PrecisionLoss { max_term, sum });
        }
        Ok(2.0 * self.c * lambda * t.powf(1.0 - alpha) * sum)
    }
}

/// Output of the forward Volterra solve.
///
/// The solve itself never clamps; slightly negative values (discretization
/// noise around a zero crossing) are reported so callers can decide how loud
/// to complain.
#[derive(Debug, Clone)]
pub struct DiscreteStabilizer {
    /// `sigma2` at the grid points. The origin slot follows the local power:
    /// zero below order 1, infinite above, the flat value for order 1.
    pub values: Vec<f64>,
    /// How many interior values came out negative.
    pub negative_count: usize,
    /// Most negative interior value (0 when none are negative).
    pub min_value: f64,
}

/// Origin slot of a sampled profile: the continuous limit of `sigma2` at 0,
/// which follows the local power `t^(1-order)`.
fn origin_slot(table: &ResolventTable, c: f64) -> f64 {
    let lam = table.lambda();
    let order = match *table.spec() {
        KernelSpec::Constant { .. } => 1.0,
        KernelSpec::Fractional { alpha } | KernelSpec::Gamma { alpha, .. } => alpha,
    };
    if (order - 1.0).abs() < 1e-6 {
        // flat kernel: sigma2 is constant, pin the origin to the level
        match *table.spec() {
            KernelSpec::Constant { level } => 2.0 * c * lam / level,
            _ => 2.0 * c * lam,
        }
    } else if order < 1.0 || lam == 0.0 || c == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

fn count_negatives(values: &[f64]) -> (usize, f64) {
    let mut negative_count = 0;
    let mut min_value = 0.0_f64;
    for v in &values[1..] {
        if *v < 0.0 {
            negative_count += 1;
            min_value = min_value.min(*v);
        }
    }
    (negative_count, min_value)
}

/// Solves the defining equation on the table's grid by forward substitution.
///
/// The convolution is discretized with right-endpoint samples of `f^2` per
/// offset cell, so the weight multiplying the newest unknown is
/// `f(dt)^2 dt`. For orders above 1 that weight vanishes at the origin and
/// the first step instead seeds with the leading term of the small-time
/// expansion.
pub fn stabilizer_discrete(table: &ResolventTable, c: f64) -> Result<DiscreteStabilizer> {
    check_fraction(c)?;
    let lam = table.lambda();
    let grid = table.grid();
    let n = grid.n();
    let dt = grid.dt();
    let r = table.r_values();
    let f = table.f_values();

    let mut values = vec![0.0; n + 1];
    values[0] = origin_slot(table, c);
    if lam == 0.0 || c == 0.0 {
        return Ok(DiscreteStabilizer { values, negative_count: 0, min_value: 0.0 });
    }

    // squared density at the cell right endpoints
    let fsq: Vec<f64> = f.iter().map(|v| v * v).collect();
    let pivot = fsq[1] * dt;
    if !(pivot > 1e-300) {
        return Err(Error::PivotUnderflow);
    }

    let order = match *table.spec() {
        KernelSpec::Constant { .. } => 1.0,
        KernelSpec::Fractional { alpha } | KernelSpec::Gamma { alpha, .. } => alpha,
    };
    let start = if order > 1.0 + 1e-6 {
        // seed from sigma2 ~ 2 c lambda c0 t^(1-alpha): the vanishing pivot
        // would otherwise blow up the first step
        let c0 = ck_coefficients(order, 1)?[0];
        values[1] = 2.0 * c * lam * c0 * dt.powf(1.0 - order);
        2
    } else {
        1
    };

    for k in start..=n {
        let target = c * lam * lam * (1.0 - r[k] * r[k]);
        let mut acc = 0.0;
        for j in 1..k {
            acc += fsq[k - j + 1] * values[j];
        }
        values[k] = (target - acc * dt) / pivot;
    }

    let (negative_count, min_value) = count_negatives(&values);
    Ok(DiscreteStabilizer { values, negative_count, min_value })
}

/// Forward solve against the exact cell masses of `f^2`.
///
/// Same equation as [`stabilizer_discrete`], but every convolution cell is
/// weighted by its true mass [`ResolventTable::f_sq_cells`] instead of a
/// sampled value, so the solved profile satisfies
///
/// ```text
/// sum_{j=1..k} cells[k - j] * sigma2[j] = c lambda^2 (1 - R(t_k)^2)
/// ```
///
/// at every grid point. A sampler that realizes those same per-cell gains
/// (exact Gaussian convolution increments) then reproduces the target
/// variance identically for a state-free diffusion, whatever power law the
/// kernel carries at the origin; sampled weights instead misprice the
/// origin cell badly for strongly singular kernels.
fn cell_mass_solve(table: &ResolventTable, c: f64) -> Result<DiscreteStabilizer> {
    check_fraction(c)?;
    let lam = table.lambda();
    let n = table.grid().n();
    let r = table.r_values();

    let mut values = vec![0.0; n + 1];
    values[0] = origin_slot(table, c);
    if lam == 0.0 || c == 0.0 {
        return Ok(DiscreteStabilizer { values, negative_count: 0, min_value: 0.0 });
    }

    let cells = table.f_sq_cells()?;
    let pivot = cells[0];
    if !(pivot > 1e-300) {
        return Err(Error::PivotUnderflow);
    }
    for k in 1..=n {
        let target = c * lam * lam * (1.0 - r[k] * r[k]);
        let mut acc = 0.0;
        for j in 1..k {
            acc += cells[k - j] * values[j];
        }
        values[k] = (target - acc) / pivot;
    }

    let (negative_count, min_value) = count_negatives(&values);
    Ok(DiscreteStabilizer { values, negative_count, min_value })
}

/// Long-run limit `c * lambda^2 * (1 - a^2) / ||f||^2`.
pub fn stabilizer_asymptote(table: &ResolventTable, c: f64) -> Result<f64> {
    check_fraction(c)?;
    let lam = table.lambda();
    if lam == 0.0 || c == 0.0 {
        return Ok(0.0);
    }
    let l2 = table.f_l2_sq();
    if !(l2 > 0.0) {
        return Err(Error::Domain("asymptote needs a positive squared norm"));
    }
    let a = table.tail_a();
    Ok(c * lam * lam * (1.0 - a * a) / l2)
}

/// Route [`Stabilizer::build`] settled on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// Flat kernel: the profile is a known constant.
    ClosedForm,
    /// Power-law kernel within the series range.
    Series,
    /// Forward Volterra solve on the grid.
    Discrete,
}

/// Stabilizer profile sampled on a resolvent table's grid.
#[derive(Debug, Clone)]
pub struct Stabilizer {
    route: Route,
    values: Vec<f64>,
    asymptote: f64,
    negative_count: usize,
    min_value: f64,
}

impl Stabilizer {
    /// Samples the profile for `(table, c)` through the most accurate route
    /// available for the table's kernel.
    ///
    /// The grid route solves against the exact cell masses of `f^2`, so the
    /// samples stay consistent with samplers that realize exact per-cell
    /// Gaussian increments even when the kernel is strongly singular.
    pub fn build(table: &ResolventTable, c: f64) -> Result<Self> {
        check_fraction(c)?;
        let lam = table.lambda();
        let grid = table.grid();
        let len = grid.len();

        if lam == 0.0 || c == 0.0 {
            return Ok(Stabilizer {
                route: Route::ClosedForm,
                values: vec![0.0; len],
                asymptote: 0.0,
                negative_count: 0,
                min_value: 0.0,
            });
        }
        let asymptote = stabilizer_asymptote(table, c)?;

        match *table.spec() {
            KernelSpec::Constant { level } => Ok(Stabilizer {
                route: Route::ClosedForm,
                values: vec![2.0 * c * lam / level; len],
                asymptote,
                negative_count: 0,
                min_value: 0.0,
            }),
            KernelSpec::Fractional { alpha } if (alpha - 1.0).abs() < 1e-6 => Ok(Stabilizer {
                route: Route::ClosedForm,
                values: vec![2.0 * c * lam; len],
                asymptote,
                negative_count: 0,
                min_value: 0.0,
            }),
            KernelSpec::Fractional { alpha } => {
                let x_end = lam.powf(1.0 / alpha) * grid.t_max();
                // The alternating sum cancels like exp(x^alpha); keep that
                // exponent small enough that the precision guard in
                // `SeriesStabilizer::eval` cannot trip mid-grid.
                let cancellation = lam * grid.t_max().powf(alpha);
                if x_end <= X_SWITCH && cancellation <= 10.0 {
                    let series = SeriesStabilizer::new(alpha, lam, c)?;
                    let mut values = Vec::with_capacity(len);
                    for k in 0..len {
                        values.push(series.eval(grid.point(k))?);
                    }
                    Ok(Stabilizer {
                        route: Route::Series,
                        values,
                        asymptote,
                        negative_count: 0,
                        min_value: 0.0,
                    })
                } else {
                    let d = cell_mass_solve(table, c)?;
                    Ok(Stabilizer {
                        route: Route::Discrete,
                        values: d.values,
                        asymptote,
                        negative_count: d.negative_count,
                        min_value: d.min_value,
                    })
                }
            }
            KernelSpec::Gamma { .. } => {
                let d = cell_mass_solve(table, c)?;
                Ok(Stabilizer {
                    route: Route::Discrete,
                    values: d.values,
                    asymptote,
                    negative_count: d.negative_count,
                    min_value: d.min_value,
                })
            }
        }
    }

    /// Which route produced the samples.
    pub fn route(&self) -> Route {
        self.route
    }

    /// `sigma2` at the grid points.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Long-run limit of the profile.
    pub fn asymptote(&self) -> f64 {
        self.asymptote
    }

    /// Negative interior samples produced by the discrete route.
    pub fn negative_count(&self) -> usize {
        self.negative_count
    }

    /// Most negative interior sample (0 when none).
    pub fn min_value(&self) -> f64 {
        self.min_value
    }
}
