//! Experiment configuration: catalog budgets, config file and CLI overrides.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::experiments::{find, Ctx, Experiment};

pub const DEFAULT_SEED: u64 = 20_240_601;

/// Default cap on simulated steps per experiment (`n · horizon / dt`).
pub const WORK_LIMIT: f64 = 5e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Quick,
    Full,
}

impl FromStr for Suite {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Suite::Quick),
            "full" => Ok(Suite::Full),
            other => Err(HarnessError::Config(format!("unknown suite `{other}` (expected quick or full)"))),
        }
    }
}

impl std::fmt::Display for Suite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Suite::Quick => "quick",
            Suite::Full => "full",
        })
    }
}

/// A partial set of settings; later layers win field by field.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bias_tolerance: Option<f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
}

impl Settings {
    fn layer(&mut self, top: &Settings) {
        self.n = top.n.or(self.n);
        self.dt = top.dt.or(self.dt);
        self.seed = top.seed.or(self.seed);
        self.bias_tolerance = top.bias_tolerance.or(self.bias_tolerance);
        for (k, v) in &top.params {
            self.params.insert(k.clone(), *v);
        }
    }
}

/// `{"defaults": {...}, "overrides": {"name": {...}}}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub defaults: Settings,
    pub overrides: BTreeMap<String, Settings>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ConfigFile = serde_json::from_str(text)?;
        for name in cfg.overrides.keys() {
            if find(name).is_none() {
                return Err(HarnessError::UnknownExperiment(name.clone()));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

/// Fully resolved settings for one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub bias_tolerance: f64,
    pub params: BTreeMap<String, f64>,
    pub work_limit: f64,
}

impl ExperimentConfig {
    /// Catalog budget, then config defaults, then the per-experiment override, then CLI flags.
    pub fn resolve(name: &str, suite: Suite, file: Option<&ConfigFile>, cli: &Settings) -> Result<Self> {
        let exp = find(name).ok_or_else(|| HarnessError::UnknownExperiment(name.to_string()))?;
        let budget = match suite {
            Suite::Quick => exp.quick,
            Suite::Full => exp.full,
        };
        let mut s = Settings {
            n: Some(budget.n),
            dt: Some(budget.dt),
            seed: Some(DEFAULT_SEED),
            bias_tolerance: Some(loctime::stats::GRID_BIAS_TOLERANCE),
            params: BTreeMap::new(),
        };
        if let Some(f) = file {
            s.layer(&f.defaults);
            if let Some(o) = f.overrides.get(name) {
                s.layer(o);
            }
        }
        s.layer(cli);
        let cfg = Self {
            name: name.to_string(),
            n_paths: s.n.unwrap_or(budget.n),
            dt: s.dt.unwrap_or(budget.dt),
            seed: s.seed.unwrap_or(DEFAULT_SEED),
            bias_tolerance: s.bias_tolerance.unwrap_or(loctime::stats::GRID_BIAS_TOLERANCE),
            params: s.params,
            work_limit: WORK_LIMIT,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn experiment(&self) -> Result<&'static Experiment> {
        find(&self.name).ok_or_else(|| HarnessError::UnknownExperiment(self.name.clone()))
    }

    pub fn work(&self) -> Result<f64> {
        Ok(self.n_paths as f64 * self.experiment()?.horizon / self.dt)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(HarnessError::Config(format!("`{}`: n must be positive", self.name)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(HarnessError::Config(format!("`{}`: dt must be positive", self.name)));
        }
        if !(self.bias_tolerance >= 0.0 && self.bias_tolerance < 1.0) {
            return Err(HarnessError::Config(format!("`{}`: bias_tolerance must lie in [0, 1)", self.name)));
        }
        let work = self.work()?;
        if work > self.work_limit {
            return Err(HarnessError::BudgetExceeded { name: self.name.clone(), work, limit: self.work_limit });
        }
        Ok(())
    }

    pub fn ctx(&self) -> Ctx {
        Ctx { n: self.n_paths, dt: self.dt, seed: self.seed, bias: self.bias_tolerance, params: self.params.clone() }
    }
}
