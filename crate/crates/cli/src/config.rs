//! Run configuration.
//!
//! A config is a flat set of `key = value` lines (`#` starts a comment).
//! The same keys are accepted as a JSON object, and a run's `manifest.json`
//! can be fed back as a config. Command-line flags override file values.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::fmt::Write as _;
use std::path::Path;

use bbm_core::engine::{PruneConfig, SimulationConfig, Window, DEFAULT_GRID_DT, DEFAULT_MAX_PARTICLES};
use bbm_core::envelope::{check_exponents, EnvelopeSpec};
use bbm_core::kernels::OffspringLaw;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub t: f64,
    pub replicas: u64,
    pub seed: u64,
    pub offspring: OffspringLaw,
    pub grid_dt: f64,
    pub max_particles: usize,
    pub prune_margin: Option<f64>,
    pub window: Window,
    pub r: Vec<f64>,
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub y: f64,
    pub horizons: Vec<f64>,
    /// `y` in `N_t[y, inf)`, relative to `m(t)`.
    pub count_level: f64,
    pub quantile: f64,
    /// Absolute exceedance level; `sqrt2 t - 3` when unset.
    pub exceedance_level: Option<f64>,
    pub gibbs_beta: f64,
    pub pairs: usize,
    /// Replicas that get Gibbs samples; all when unset.
    pub gibbs_replicas: Option<u64>,
    pub bins: usize,
    pub max_rank: usize,
    pub control_samples: usize,
    pub dx: f64,
    /// Solver time step; `dx^2 / 4` when unset.
    pub dt: Option<f64>,
    pub width: f64,
    pub fkpp_t: f64,
    pub mckean_replicas: u64,
    pub trials: u64,
    pub bridge_grid_dt: f64,
    pub bound_draws: u64,
    /// Displacement resamples per skeleton for the covariance table; off at 0.
    pub resamples: u64,
    pub skeleton_t: f64,
    pub skeletons: u64,
    pub covariance_pairs: usize,
    pub dump_trees: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            t: 10.0,
            replicas: 100,
            seed: 1,
            offspring: OffspringLaw::binary(),
            grid_dt: DEFAULT_GRID_DT,
            max_particles: DEFAULT_MAX_PARTICLES,
            prune_margin: None,
            window: Window::default(),
            r: vec![1.0, 2.0, 3.0],
            gamma: 1.0 / 3.0,
            alpha: 1.0 / 3.0,
            beta: 2.0 / 3.0,
            y: 0.0,
            horizons: vec![8.0, 10.0, 12.0],
            count_level: -1.0,
            quantile: 0.99,
            exceedance_level: None,
            gibbs_beta: 2.0,
            pairs: 100,
            gibbs_replicas: None,
            bins: 24,
            max_rank: 20,
            control_samples: 100_000,
            dx: 0.02,
            dt: None,
            width: 80.0,
            fkpp_t: 60.0,
            mckean_replicas: 100_000,
            trials: 100_000,
            bridge_grid_dt: 0.001,
            bound_draws: 1000,
            resamples: 0,
            skeleton_t: 6.0,
            skeletons: 4,
            covariance_pairs: 20,
            dump_trees: 0,
        }
    }
}

/// Every accepted key, in file order.
pub const KEYS: &[&str] = &[
    "t",
    "replicas",
    "seed",
    "offspring",
    "grid_dt",
    "max_particles",
    "prune_margin",
    "window",
    "r",
    "gamma",
    "alpha",
    "beta",
    "y",
    "horizons",
    "count_level",
    "quantile",
    "exceedance_level",
    "gibbs_beta",
    "pairs",
    "gibbs_replicas",
    "bins",
    "max_rank",
    "control_samples",
    "dx",
    "dt",
    "width",
    "fkpp_t",
    "mckean_replicas",
    "trials",
    "bridge_grid_dt",
    "bound_draws",
    "resamples",
    "skeleton_t",
    "skeletons",
    "covariance_pairs",
    "dump_trees",
];

fn bad(key: &str, value: &str, what: &str) -> CliError {
    CliError::Config(format!("{key} = {value:?}: expected {what}"))
}

fn num(key: &str, v: &str) -> CliResult<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| bad(key, v, "a finite number"))
}

fn int<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.parse::<T>().map_err(|_| bad(key, v, "a non-negative integer"))
}

fn list(key: &str, v: &str) -> CliResult<Vec<f64>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}

fn unset(v: &str) -> bool {
    v.is_empty() || v.eq_ignore_ascii_case("none")
}

fn opt<T>(v: &str, parse: impl FnOnce(&str) -> CliResult<T>) -> CliResult<Option<T>> {
    if unset(v) {
        Ok(None)
    } else {
        parse(v).map(Some)
    }
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn show<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), T::to_string)
}

impl RunConfig {
    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let v = value.trim();
        match key {
            "t" => self.t = num(key, v)?,
            "replicas" => self.replicas = int(key, v)?,
            "seed" => self.seed = int(key, v)?,
            "offspring" => {
                self.offspring = OffspringLaw::parse(v).map_err(|e| CliError::Config(format!("offspring: {e}")))?
            }
            "grid_dt" => self.grid_dt = num(key, v)?,
            "max_particles" => self.max_particles = int(key, v)?,
            "prune_margin" => self.prune_margin = opt(v, |v| num(key, v))?,
            "window" => self.window = Window::parse(v).map_err(|e| CliError::Config(format!("window: {e}")))?,
            "r" => self.r = list(key, v)?,
            "gamma" => self.gamma = num(key, v)?,
            "alpha" => self.alpha = num(key, v)?,
            "beta" => self.beta = num(key, v)?,
            "y" => self.y = num(key, v)?,
            "horizons" => self.horizons = list(key, v)?,
            "count_level" => self.count_level = num(key, v)?,
            "quantile" => self.quantile = num(key, v)?,
            "exceedance_level" => self.exceedance_level = opt(v, |v| num(key, v))?,
            "gibbs_beta" => self.gibbs_beta = num(key, v)?,
            "pairs" => self.pairs = int(key, v)?,
            "gibbs_replicas" => self.gibbs_replicas = opt(v, |v| int(key, v))?,
            "bins" => self.bins = int(key, v)?,
            "max_rank" => self.max_rank = int(key, v)?,
            "control_samples" => self.control_samples = int(key, v)?,
            "dx" => self.dx = num(key, v)?,
            "dt" => self.dt = opt(v, |v| num(key, v))?,
            "width" => self.width = num(key, v)?,
            "fkpp_t" => self.fkpp_t = num(key, v)?,
            "mckean_replicas" => self.mckean_replicas = int(key, v)?,
            "trials" => self.trials = int(key, v)?,
            "bridge_grid_dt" => self.bridge_grid_dt = num(key, v)?,
            "bound_draws" => self.bound_draws = int(key, v)?,
            "resamples" => self.resamples = int(key, v)?,
            "skeleton_t" => self.skeleton_t = num(key, v)?,
            "skeletons" => self.skeletons = int(key, v)?,
            "covariance_pairs" => self.covariance_pairs = int(key, v)?,
            "dump_trees" => self.dump_trees = int(key, v)?,
            _ => return Err(CliError::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Text form of one key, as accepted by [`RunConfig::set`].
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "t" => self.t.to_string(),
            "replicas" => self.replicas.to_string(),
            "seed" => self.seed.to_string(),
            "offspring" => self.offspring.to_spec(),
            "grid_dt" => self.grid_dt.to_string(),
            "max_particles" => self.max_particles.to_string(),
            "prune_margin" => show(&self.prune_margin),
            "window" => format!("{}:{}", self.window.lo, self.window.hi),
            "r" => join(&self.r),
            "gamma" => self.gamma.to_string(),
            "alpha" => self.alpha.to_string(),
            "beta" => self.beta.to_string(),
            "y" => self.y.to_string(),
            "horizons" => join(&self.horizons),
            "count_level" => self.count_level.to_string(),
            "quantile" => self.quantile.to_string(),
            "exceedance_level" => show(&self.exceedance_level),
            "gibbs_beta" => self.gibbs_beta.to_string(),
            "pairs" => self.pairs.to_string(),
            "gibbs_replicas" => show(&self.gibbs_replicas),
            "bins" => self.bins.to_string(),
            "max_rank" => self.max_rank.to_string(),
            "control_samples" => self.control_samples.to_string(),
            "dx" => self.dx.to_string(),
            "dt" => show(&self.dt),
            "width" => self.width.to_string(),
            "fkpp_t" => self.fkpp_t.to_string(),
            "mckean_replicas" => self.mckean_replicas.to_string(),
            "trials" => self.trials.to_string(),
            "bridge_grid_dt" => self.bridge_grid_dt.to_string(),
            "bound_draws" => self.bound_draws.to_string(),
            "resamples" => self.resamples.to_string(),
            "skeleton_t" => self.skeleton_t.to_string(),
            "skeletons" => self.skeletons.to_string(),
            "covariance_pairs" => self.covariance_pairs.to_string(),
            "dump_trees" => self.dump_trees.to_string(),
            _ => return None,
        })
    }

    pub fn parse_kv(text: &str) -> CliResult<Self> {
        let mut cfg = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", n + 1)))?;
            cfg.set(key.trim(), value)?;
        }
        Ok(cfg)
    }

    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("listed key"));
        }
        out
    }

    /// Reads a JSON object of config keys. A run manifest is accepted too:
    /// its `config` member is used.
    pub fn parse_json(text: &str) -> CliResult<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| CliError::Config(format!("bad JSON config: {e}")))?;
        let obj = match &value {
            Value::Object(m) if m.get("config").is_some_and(Value::is_object) => m["config"].as_object().unwrap(),
            Value::Object(m) => m,
            _ => return Err(CliError::Config("JSON config must be an object".into())),
        };
        let mut cfg = Self::default();
        for (key, v) in obj {
            let text = match v {
                Value::Null => "none".to_string(),
                Value::String(s) => s.clone(),
                Value::Number(n) => n.to_string(),
                Value::Array(items) => items
                    .iter()
                    .map(|x| match x {
                        Value::Number(n) => Ok(n.to_string()),
                        _ => Err(CliError::Config(format!("{key}: list entries must be numbers"))),
                    })
                    .collect::<CliResult<Vec<_>>>()?
                    .join(","),
                _ => return Err(CliError::Config(format!("{key}: unsupported JSON value {v}"))),
            };
            cfg.set(key, &text)?;
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for key in KEYS {
            let text = self.get(key).expect("listed key");
            let value = match *key {
                "offspring" | "window" => Value::String(text),
                "r" | "horizons" => Value::from(if *key == "r" { self.r.clone() } else { self.horizons.clone() }),
                _ if text == "none" => Value::Null,
                _ => serde_json::from_str(&text).unwrap_or(Value::String(text)),
            };
            map.insert(key.to_string(), value);
        }
        Value::Object(map)
    }

    /// Loads a file: JSON when it parses as JSON, key-value text otherwise.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        if text.trim_start().starts_with('{') {
            Self::parse_json(&text)
        } else {
            Self::parse_kv(&text)
        }
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_kv()).map_err(CliError::from)
    }

    pub fn simulation(&self, horizon: f64) -> CliResult<SimulationConfig> {
        let prune = match self.prune_margin {
            Some(l) => PruneConfig::with_margin(l).map_err(config_err)?,
            None => PruneConfig::disabled(),
        };
        let cfg = SimulationConfig::new(horizon, self.offspring.clone())
            .with_grid(self.grid_dt)
            .with_prune(prune)
            .with_max_particles(self.max_particles);
        cfg.validate().map_err(config_err)?;
        Ok(cfg)
    }

    pub fn envelope(&self) -> CliResult<EnvelopeSpec> {
        EnvelopeSpec::new(self.t, self.gamma, self.alpha, self.beta, self.y).map_err(config_err)
    }

    pub fn exceedance_level(&self) -> f64 {
        self.exceedance_level.unwrap_or(SQRT_2 * self.t - 3.0)
    }

    /// Checks every constraint that does not depend on the command.
    pub fn validate(&self) -> CliResult<()> {
        let fail = |msg: String| Err(CliError::Config(msg));
        if !(self.t > 0.0) {
            return fail(format!("t must be positive, got {}", self.t));
        }
        if self.replicas == 0 {
            return fail("replicas must be at least 1".into());
        }
        check_exponents(self.gamma, self.alpha, self.beta).map_err(config_err)?;
        if !(self.quantile > 0.0 && self.quantile < 1.0) {
            return fail(format!("quantile must lie in (0, 1), got {}", self.quantile));
        }
        if !(self.gibbs_beta > 0.0) {
            return fail(format!("gibbs_beta must be positive (inverse temperature), got {}", self.gibbs_beta));
        }
        if self.pairs == 0 || self.bins == 0 {
            return fail("pairs and bins must be at least 1".into());
        }
        if !(1..=bbm_core::stats::gaps::MAX_GAP_RANK).contains(&self.max_rank) {
            return fail(format!(
                "max_rank must lie in 1..={}, got {}",
                bbm_core::stats::gaps::MAX_GAP_RANK,
                self.max_rank
            ));
        }
        if self.r.is_empty() {
            return fail("r needs at least one value".into());
        }
        if self.horizons.iter().any(|h| !(*h > 1.0)) {
            return fail("every horizon must exceed 1 (the front m(t) needs t > 1)".into());
        }
        self.simulation(self.t)?;
        Ok(())
    }

    /// `t > 3r` for every `r`: the regime of the genealogy concentration
    /// statement.
    pub fn validate_genealogy_regime(&self) -> CliResult<()> {
        for &r in &self.r {
            if !(r > 0.0 && self.t > 3.0 * r) {
                return Err(CliError::Config(format!(
                    "genealogy needs r > 0 and t > 3r, got t = {}, r = {r}",
                    self.t
                )));
            }
        }
        Ok(())
    }

    /// `0 <= r < t/2` for every `r`, so that `[r, t - r]` is a window.
    pub fn validate_envelope_window(&self) -> CliResult<()> {
        for &r in &self.r {
            if !(r >= 0.0 && 2.0 * r < self.t) {
                return Err(CliError::Config(format!(
                    "envelope scans need 0 <= r < t/2, got t = {}, r = {r}",
                    self.t
                )));
            }
        }
        Ok(())
    }

    /// Key-value echo used in manifests.
    pub fn echo(&self) -> BTreeMap<String, String> {
        KEYS.iter()
            .map(|k| (k.to_string(), self.get(k).expect("listed key")))
            .collect()
    }
}

pub(crate) fn config_err(e: bbm_core::Error) -> CliError {
    CliError::from(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn kv_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.set("offspring", "1:0.25,2:0.5,3:0.25").unwrap();
        cfg.set("window", "-3:0.5").unwrap();
        cfg.set("r", "1, 2.5,5").unwrap();
        cfg.set("prune_margin", "40").unwrap();
        cfg.set("gamma", "0.1").unwrap();
        cfg.set("dt", "0.0001").unwrap();
        let back = RunConfig::parse_kv(&cfg.to_kv()).unwrap();
        assert_eq!(back, cfg);
        let json = RunConfig::parse_json(&cfg.to_json().to_string()).unwrap();
        assert_eq!(json, cfg);
    }

    #[test]
    fn comments_and_blank_lines() {
        let cfg = RunConfig::parse_kv("# campaign\n\nt = 12 # horizon\nseed=7\n").unwrap();
        assert_eq!(cfg.t, 12.0);
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn rejects_unnormalized_law() {
        let err = RunConfig::parse_kv("offspring = 1:0.2,2:0.8").unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        assert!(err.to_string().contains("sum k*p_k = 2"), "{err}");
    }

    #[test]
    fn rejects_alpha_outside_hypothesis() {
        let cfg = RunConfig::parse_kv("alpha = 0.6").unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("0<α<1/2"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(RunConfig::parse_kv("temperature = 3").is_err());
        assert!(RunConfig::parse_kv("t 3").is_err());
        assert!(RunConfig::parse_kv("t = abc").is_err());
    }

    #[test]
    fn genealogy_regime() {
        let mut cfg = RunConfig::default();
        cfg.t = 12.0;
        cfg.validate_genealogy_regime().unwrap();
        cfg.r = vec![4.0];
        assert!(cfg.validate_genealogy_regime().is_err());
        cfg.r = vec![5.0];
        cfg.validate_envelope_window().unwrap();
        cfg.r = vec![6.0];
        assert!(cfg.validate_envelope_window().is_err());
    }

    #[test]
    fn manifest_config_member_is_used() {
        let text = r#"{"command": "simulate", "config": {"t": 4, "seed": 9, "r": [1, 2]}}"#;
        let cfg = RunConfig::parse_json(text).unwrap();
        assert_eq!((cfg.t, cfg.seed, cfg.r.clone()), (4.0, 9, vec![1.0, 2.0]));
    }
}
