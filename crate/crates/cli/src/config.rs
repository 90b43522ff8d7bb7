//! Flat `key=value` experiment configuration with dotted keys.
//!
//! Layering: built-in defaults, then an optional file, then `--set`
//! overrides. Blank lines and `#` comments are ignored. A run manifest uses
//! the same format, so any manifest can be fed back with `--config`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use tvtrack::{ExperimentConfig, LossConstants, RandomWalkConfig, WeightScheme};

use crate::error::CliError;

/// Every recognised key with its default (`auto` = derived from other keys).
pub const KEYS: &[(&str, &str)] = &[
    ("scheme", "uniform"),
    ("scheme.gamma", "0.7"),
    ("loss.mu", "0.1"),
    ("loss.L", "auto"),
    ("loss.C", "auto"),
    ("tracker.eta", "2"),
    ("tracker.E", "10"),
    ("tracker.w0", "0"),
    ("walk.c_max", "100"),
    ("walk.sigma2", "100"),
    ("walk.c0", "0"),
    ("walk.dim", "1"),
    ("walk.seed", "0"),
    ("run.horizon", "1000"),
    ("run.num_runs", "1000"),
    ("run.record_every", "1"),
    ("run.window_fraction", "0.2"),
    ("check.envelope_scale", "1"),
    ("bounds.epsilon", "0.1"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            values: KEYS
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }
}

impl Settings {
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut s = Settings::default();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).map_err(|e| {
                CliError::config("--config", format!("cannot read {}: {e}", p.display()))
            })?;
            s.apply_text(&text)?;
        }
        s.apply_overrides(overrides)?;
        Ok(s)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::config("--config", format!("line {}: expected key=value, got `{line}`", n + 1))
            })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<(), CliError> {
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| CliError::config("--set", format!("expected key=value, got `{o}`")))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.to_string();
                Ok(())
            }
            None => Err(CliError::config(key, "unknown configuration key")),
        }
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    fn f64(&self, key: &str) -> Result<f64, CliError> {
        let raw = self.get(key);
        raw.parse::<f64>()
            .ok()
            .filter(|x| !x.is_nan())
            .ok_or_else(|| CliError::config(key, format!("expected a number, got `{raw}`")))
    }

    fn f64_or_auto(&self, key: &str, auto: f64) -> Result<f64, CliError> {
        if self.get(key) == "auto" {
            Ok(auto)
        } else {
            self.f64(key)
        }
    }

    fn integer<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError> {
        let raw = self.get(key);
        raw.parse::<T>()
            .map_err(|_| CliError::config(key, format!("expected a non-negative integer, got `{raw}`")))
    }

    pub fn budgets(&self) -> Result<Vec<u32>, CliError> {
        let raw = self.get("tracker.E");
        raw.split(',')
            .map(|p| {
                p.trim().parse::<u32>().map_err(|_| {
                    CliError::config("tracker.E", format!("expected a comma-separated list of integers, got `{raw}`"))
                })
            })
            .collect()
    }

    /// A comma list of `dim` numbers, or one number broadcast to every coordinate.
    fn vector(&self, key: &str, dim: usize) -> Result<Vec<f64>, CliError> {
        let raw = self.get(key);
        let parts = raw
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::config(key, format!("expected numbers, got `{raw}`")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        match parts.len() {
            1 => Ok(vec![parts[0]; dim]),
            n if n == dim => Ok(parts),
            n => Err(CliError::config(key, format!("expected 1 or {dim} values, got {n}"))),
        }
    }

    pub fn scheme(&self) -> Result<WeightScheme, CliError> {
        match self.get("scheme") {
            "uniform" => Ok(WeightScheme::Uniform),
            "discounted" => WeightScheme::discounted(self.f64("scheme.gamma")?)
                .map_err(|e| CliError::from_core(e, "scheme.gamma")),
            other => Err(CliError::config(
                "scheme",
                format!("expected `uniform` or `discounted`, got `{other}`"),
            )),
        }
    }

    pub fn epsilon(&self) -> Result<f64, CliError> {
        self.f64("bounds.epsilon")
    }

    /// Constants with `L` defaulting to `mu` and `C` to `C_max sqrt(dim)`.
    pub fn constants(&self) -> Result<LossConstants, CliError> {
        let mu = self.f64("loss.mu")?;
        let dim: usize = self.integer("walk.dim")?;
        let c_max = self.f64("walk.c_max")?;
        let l = self.f64_or_auto("loss.L", mu)?;
        let c = self.f64_or_auto("loss.C", c_max * (dim as f64).sqrt())?;
        LossConstants::new(mu, l, c).map_err(|e| CliError::from_core(e, "loss.mu"))
    }

    pub fn experiment(&self) -> Result<ExperimentConfig, CliError> {
        let scheme = self.scheme()?;
        let constants = self.constants()?;
        let dim: usize = self.integer("walk.dim")?;
        if dim == 0 {
            return Err(CliError::config("walk.dim", "must be at least 1"));
        }
        let walk = RandomWalkConfig {
            c_max: self.f64("walk.c_max")?,
            sigma2: self.f64("walk.sigma2")?,
            c0: self.vector("walk.c0", dim)?,
            seed: self.integer("walk.seed")?,
        };
        let cfg = ExperimentConfig {
            scheme,
            constants,
            curvature: vec![constants.mu; dim],
            eta: self.f64("tracker.eta")?,
            w0: self.vector("tracker.w0", dim)?,
            walk,
            horizon: self.integer("run.horizon")?,
            num_runs: self.integer("run.num_runs")?,
            budgets: self.budgets()?,
            record_every: self.integer("run.record_every")?,
            window_fraction: self.f64("run.window_fraction")?,
            envelope_scale: self.f64("check.envelope_scale")?,
        };
        cfg.validate().map_err(|e| CliError::from_core(e, "run"))?;
        Ok(cfg)
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Manifest text: every effective key, resolved, in canonical order.
pub fn manifest(cfg: &ExperimentConfig, extra_comment: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# tvtrack run manifest {}", env!("CARGO_PKG_VERSION"));
    if !extra_comment.is_empty() {
        let _ = writeln!(out, "# {extra_comment}");
    }
    let (scheme, gamma) = match cfg.scheme.gamma() {
        Some(g) => ("discounted", g.to_string()),
        None => ("uniform", "0.7".to_string()),
    };
    let budgets = cfg
        .budgets
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(",");
    let entries = [
        ("scheme", scheme.to_string()),
        ("scheme.gamma", gamma),
        ("loss.mu", cfg.constants.mu.to_string()),
        ("loss.L", cfg.constants.smoothness.to_string()),
        ("loss.C", cfg.constants.minimizer_bound.to_string()),
        ("tracker.eta", cfg.eta.to_string()),
        ("tracker.E", budgets),
        ("tracker.w0", join(&cfg.w0)),
        ("walk.c_max", cfg.walk.c_max.to_string()),
        ("walk.sigma2", cfg.walk.sigma2.to_string()),
        ("walk.c0", join(&cfg.walk.c0)),
        ("walk.dim", cfg.walk.dim().to_string()),
        ("walk.seed", cfg.walk.seed.to_string()),
        ("run.horizon", cfg.horizon.to_string()),
        ("run.num_runs", cfg.num_runs.to_string()),
        ("run.record_every", cfg.record_every.to_string()),
        ("run.window_fraction", cfg.window_fraction.to_string()),
        ("check.envelope_scale", cfg.envelope_scale.to_string()),
    ];
    for (k, v) in entries {
        let _ = writeln!(out, "{k}={v}");
    }
    out
}
