//! Flat `key = value` run configuration.
//!
//! Keys mirror the model structure (`kernel.*`, `diffusion.*`, `init.*`)
//! plus the run geometry (`T`, `n`, `M`, `seed`). Blank lines and lines
//! starting with `#` are skipped. Unknown keys and keys that do not apply
//! to the chosen kernel or diffusion are rejected. `kernel.H` is accepted
//! as an alias for the kernel order with `alpha = H + 1/2`; setting both
//! is an error.

use std::collections::BTreeMap;

use kernel::{KernelSpec, TimeGrid};
use sde::{DiffusionSpec, InitialLaw, SimConfig};

use crate::{Error, Result};

/// Parsed run description.
///
/// Only the kernel and the grid geometry are mandatory at parse time; the
/// remaining fields are demanded by the subcommands that consume them.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub kernel: KernelSpec,
    pub lambda: f64,
    pub mu0: Option<f64>,
    pub c: Option<f64>,
    pub diffusion: Option<DiffusionSpec>,
    pub initial: Option<InitialLaw>,
    pub initial_b: Option<InitialLaw>,
    pub t_max: f64,
    pub n: usize,
    pub paths: Option<usize>,
    pub seed: u64,
    pub sample_paths: usize,
    pub base_t: Option<f64>,
    pub lags: Option<Vec<f64>>,
}

/// Splits config text into a key map, rejecting duplicates.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", idx + 1)))?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(Error::Config(format!(
                "line {}: empty key or value",
                idx + 1
            )));
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(Error::Config(format!("duplicate key '{key}'")));
        }
    }
    Ok(map)
}

/// Applies `--set key=value` overrides on top of the file contents.
pub fn apply_overrides(map: &mut BTreeMap<String, String>, sets: &[String]) -> Result<()> {
    for entry in sets {
        let (key, value) = entry
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set '{entry}': expected key=value")))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(Error::Config(format!("--set '{entry}': empty key or value")));
        }
        map.insert(key.to_string(), value.to_string());
    }
    Ok(())
}

fn parse_f64(key: &str, raw: &str) -> Result<f64> {
    raw.parse()
        .map_err(|_| Error::Config(format!("{key}: expected a number, got '{raw}'")))
}

fn take_f64(map: &mut BTreeMap<String, String>, key: &str) -> Result<Option<f64>> {
    map.remove(key).map(|raw| parse_f64(key, &raw)).transpose()
}

fn take_req_f64(map: &mut BTreeMap<String, String>, key: &str) -> Result<f64> {
    take_f64(map, key)?.ok_or_else(|| Error::Config(format!("missing required key '{key}'")))
}

fn take_usize(map: &mut BTreeMap<String, String>, key: &str) -> Result<Option<usize>> {
    map.remove(key)
        .map(|raw| {
            raw.parse()
                .map_err(|_| Error::Config(format!("{key}: expected a count, got '{raw}'")))
        })
        .transpose()
}

fn take_u64(map: &mut BTreeMap<String, String>, key: &str) -> Result<Option<u64>> {
    map.remove(key)
        .map(|raw| {
            raw.parse()
                .map_err(|_| Error::Config(format!("{key}: expected an integer, got '{raw}'")))
        })
        .transpose()
}

fn take_str(map: &mut BTreeMap<String, String>, key: &str) -> Result<String> {
    map.remove(key)
        .ok_or_else(|| Error::Config(format!("missing required key '{key}'")))
}

fn parse_f64_list(key: &str, raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|piece| parse_f64(key, piece.trim()))
        .collect()
}

fn take_f64_list(map: &mut BTreeMap<String, String>, key: &str) -> Result<Option<Vec<f64>>> {
    map.remove(key)
        .map(|raw| parse_f64_list(key, &raw))
        .transpose()
}

fn take_kernel(map: &mut BTreeMap<String, String>) -> Result<KernelSpec> {
    let ktype = take_str(map, "kernel.type")?;
    match ktype.as_str() {
        "constant" => Ok(KernelSpec::Constant {
            level: take_f64(map, "kernel.level")?.unwrap_or(1.0),
        }),
        "fractional" | "gamma" => {
            let alpha = match (take_f64(map, "kernel.alpha")?, take_f64(map, "kernel.H")?) {
                (Some(_), Some(_)) => {
                    return Err(Error::Config(
                        "set kernel.alpha or kernel.H, not both".into(),
                    ))
                }
                (Some(a), None) => a,
                (None, Some(h)) => h + 0.5,
                (None, None) => {
                    return Err(Error::Config(format!(
                        "kernel.type = {ktype} needs kernel.alpha or kernel.H"
                    )))
                }
            };
            if ktype == "fractional" {
                Ok(KernelSpec::Fractional { alpha })
            } else {
                Ok(KernelSpec::Gamma {
                    b: take_f64(map, "kernel.b")?.unwrap_or(1.0),
                    alpha,
                    rho: take_req_f64(map, "kernel.rho")?,
                })
            }
        }
        other => Err(Error::Config(format!("unknown kernel.type '{other}'"))),
    }
}

fn take_diffusion(
    map: &mut BTreeMap<String, String>,
    x_inf: Option<f64>,
) -> Result<Option<DiffusionSpec>> {
    let Some(dtype) = map.remove("diffusion.type") else {
        return Ok(None);
    };
    let center = |map: &mut BTreeMap<String, String>| -> Result<f64> {
        match take_f64(map, "diffusion.center")? {
            Some(v) => Ok(v),
            None => x_inf.ok_or_else(|| {
                Error::Config(
                    "diffusion.center defaults to mu0 / lambda; set mu0 or give it explicitly"
                        .into(),
                )
            }),
        }
    };
    let spec = match dtype.as_str() {
        "constant_sigma" => DiffusionSpec::ConstantSigma {
            sigma: take_req_f64(map, "diffusion.sigma")?,
        },
        "trinomial" => DiffusionSpec::Trinomial {
            kappa0: take_req_f64(map, "diffusion.kappa0")?,
            kappa1: take_req_f64(map, "diffusion.kappa1")?,
            kappa2: take_req_f64(map, "diffusion.kappa2")?,
            center: center(map)?,
        },
        "tanh_degenerate" => DiffusionSpec::TanhDegenerate { center: center(map)? },
        other => return Err(Error::Config(format!("unknown diffusion.type '{other}'"))),
    };
    Ok(Some(spec))
}

fn take_law(map: &mut BTreeMap<String, String>, prefix: &str) -> Result<Option<InitialLaw>> {
    let type_key = format!("{prefix}.type");
    let params_key = format!("{prefix}.params");
    let Some(ltype) = map.remove(&type_key) else {
        if map.contains_key(&params_key) {
            return Err(Error::Config(format!(
                "{params_key} given without {type_key}"
            )));
        }
        return Ok(None);
    };
    let raw = map
        .remove(&params_key)
        .ok_or_else(|| Error::Config(format!("missing required key '{params_key}'")))?;
    let params = parse_f64_list(&params_key, &raw)?;
    let law = match (ltype.as_str(), params.as_slice()) {
        ("point", [value]) => InitialLaw::Point { value: *value },
        ("normal", [mean, var]) => InitialLaw::Normal {
            mean: *mean,
            var: *var,
        },
        ("uniform", [lo, hi]) => InitialLaw::Uniform { lo: *lo, hi: *hi },
        ("point", _) => {
            return Err(Error::Config(format!("{params_key}: point wants one value")))
        }
        ("normal", _) => {
            return Err(Error::Config(format!(
                "{params_key}: normal wants mean,var"
            )))
        }
        ("uniform", _) => {
            return Err(Error::Config(format!("{params_key}: uniform wants lo,hi")))
        }
        (other, _) => return Err(Error::Config(format!("unknown {type_key} '{other}'"))),
    };
    Ok(Some(law))
}

impl Config {
    /// Assembles and validates a config from a key map, consuming every
    /// entry; leftover keys are reported as unknown or inapplicable.
    pub fn from_map(mut map: BTreeMap<String, String>) -> Result<Config> {
        let lambda = take_req_f64(&mut map, "lambda")?;
        let mu0 = take_f64(&mut map, "mu0")?;
        let kernel = take_kernel(&mut map)?;
        let c = take_f64(&mut map, "c")?;
        let x_inf = mu0.map(|m| m / lambda);
        let diffusion = take_diffusion(&mut map, x_inf)?;
        let initial = take_law(&mut map, "init")?;
        let initial_b = take_law(&mut map, "init_b")?;
        let t_max = take_req_f64(&mut map, "T")?;
        let n = take_usize(&mut map, "n")?
            .ok_or_else(|| Error::Config("missing required key 'n'".into()))?;
        let paths = take_usize(&mut map, "M")?;
        let seed = take_u64(&mut map, "seed")?.unwrap_or(0);
        let sample_paths = take_usize(&mut map, "sample_paths")?.unwrap_or(0);
        let base_t = take_f64(&mut map, "base_t")?;
        let lags = take_f64_list(&mut map, "lags")?;
        if let Some(key) = map.keys().next() {
            return Err(Error::Config(format!(
                "unknown or inapplicable key '{key}'"
            )));
        }
        let config = Config {
            kernel,
            lambda,
            mu0,
            c,
            diffusion,
            initial,
            initial_b,
            t_max,
            n,
            paths,
            seed,
            sample_paths,
            base_t,
            lags,
        };
        config.check()?;
        Ok(config)
    }

    /// Parses config text directly.
    pub fn parse(text: &str) -> Result<Config> {
        Config::from_map(parse_kv(text)?)
    }

    fn check(&self) -> Result<()> {
        let conf = |e: kernel::Error| Error::Config(e.to_string());
        self.kernel.validate().map_err(conf)?;
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::Config("lambda must be positive".into()));
        }
        TimeGrid::new(self.t_max, self.n).map_err(conf)?;
        if let Some(m) = self.mu0 {
            if !m.is_finite() {
                return Err(Error::Config("mu0 must be finite".into()));
            }
        }
        if let Some(c) = self.c {
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::Config("c must be a nonnegative number".into()));
            }
        }
        let sde_conf = |e: sde::Error| Error::Config(e.to_string());
        if let Some(d) = &self.diffusion {
            d.validate().map_err(sde_conf)?;
        }
        if let Some(l) = &self.initial {
            l.validate().map_err(sde_conf)?;
        }
        if let Some(l) = &self.initial_b {
            l.validate().map_err(sde_conf)?;
        }
        Ok(())
    }

    /// Grid described by `T` and `n`.
    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.t_max, self.n).map_err(|e| Error::Config(e.to_string()))
    }

    /// Demands the volatility fraction `c`.
    pub fn require_c(&self) -> Result<f64> {
        self.c
            .ok_or_else(|| Error::Config("missing required key 'c'".into()))
    }

    /// Builds the full simulation config, demanding every field it needs.
    pub fn sim_config(&self) -> Result<SimConfig> {
        let need = |key: &str| Error::Config(format!("missing required key '{key}'"));
        let sc = SimConfig {
            kernel: self.kernel.clone(),
            lambda: self.lambda,
            mu0: self.mu0.ok_or_else(|| need("mu0"))?,
            c: self.c.ok_or_else(|| need("c"))?,
            diffusion: self.diffusion.clone().ok_or_else(|| need("diffusion.type"))?,
            initial: self.initial.clone().ok_or_else(|| need("init.type"))?,
            grid: self.grid()?,
            paths: self.paths.ok_or_else(|| need("M"))?,
            seed: self.seed,
        };
        sc.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(sc)
    }

    /// Canonical key/value form; parsing it back yields an equal config.
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let mut kv: Vec<(String, String)> = Vec::new();
        let mut push = |key: &str, value: String| kv.push((key.to_string(), value));
        let num = |v: f64| format!("{v}");
        match self.kernel {
            KernelSpec::Constant { level } => {
                push("kernel.type", "constant".into());
                push("kernel.level", num(level));
            }
            KernelSpec::Fractional { alpha } => {
                push("kernel.type", "fractional".into());
                push("kernel.alpha", num(alpha));
            }
            KernelSpec::Gamma { b, alpha, rho } => {
                push("kernel.type", "gamma".into());
                push("kernel.alpha", num(alpha));
                push("kernel.rho", num(rho));
                push("kernel.b", num(b));
            }
        }
        push("lambda", num(self.lambda));
        if let Some(v) = self.mu0 {
            push("mu0", num(v));
        }
        if let Some(v) = self.c {
            push("c", num(v));
        }
        if let Some(d) = &self.diffusion {
            match *d {
                DiffusionSpec::ConstantSigma { sigma } => {
                    push("diffusion.type", "constant_sigma".into());
                    push("diffusion.sigma", num(sigma));
                }
                DiffusionSpec::Trinomial {
                    kappa0,
                    kappa1,
                    kappa2,
                    center,
                } => {
                    push("diffusion.type", "trinomial".into());
                    push("diffusion.kappa0", num(kappa0));
                    push("diffusion.kappa1", num(kappa1));
                    push("diffusion.kappa2", num(kappa2));
                    push("diffusion.center", num(center));
                }
                DiffusionSpec::TanhDegenerate { center } => {
                    push("diffusion.type", "tanh_degenerate".into());
                    push("diffusion.center", num(center));
                }
            }
        }
        let mut push_law = |prefix: &str, law: &InitialLaw| {
            let (ty, params) = match *law {
                InitialLaw::Point { value } => ("point", num(value)),
                InitialLaw::Normal { mean, var } => ("normal", format!("{mean},{var}")),
                InitialLaw::Uniform { lo, hi } => ("uniform", format!("{lo},{hi}")),
            };
            kv.push((format!("{prefix}.type"), ty.to_string()));
            kv.push((format!("{prefix}.params"), params));
        };
        if let Some(l) = &self.initial {
            push_law("init", l);
        }
        if let Some(l) = &self.initial_b {
            push_law("init_b", l);
        }
        kv.push(("T".into(), num(self.t_max)));
        kv.push(("n".into(), format!("{}", self.n)));
        if let Some(m) = self.paths {
            kv.push(("M".into(), format!("{m}")));
        }
        kv.push(("seed".into(), format!("{}", self.seed)));
        if self.sample_paths > 0 {
            kv.push(("sample_paths".into(), format!("{}", self.sample_paths)));
        }
        if let Some(v) = self.base_t {
            kv.push(("base_t".into(), num(v)));
        }
        if let Some(lags) = &self.lags {
            let joined = lags
                .iter()
                .map(|v| format!("{v}"))
                .collect::<Vec<_>>()
                .join(",");
            kv.push(("lags".into(), joined));
        }
        kv
    }

    /// Serializes back to config-file text.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, value) in self.to_key_values() {
            out.push_str(&key);
            out.push_str(" = ");
            out.push_str(&value);
            out.push('\n');
        }
        out
    }
}
