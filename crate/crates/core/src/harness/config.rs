//! Campaign configuration and its `key = value` file format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::envs::{self, Preset, ScoringConfig};
use crate::error::{Error, Result};
use crate::generator::{GeneratorConfig, MonitorConfig};
use crate::novelty::{ModelConfig, NoveltyConfig, ThresholdMode};
use crate::space::ScenarioSpec;

/// Cell budget used to pick the default uniform partition.
pub const DEFAULT_MAX_CELLS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Local perturbation and global exploration with window-driven switching.
    DualSpace,
    /// Uniform sampling of the whole box.
    Random,
    /// Local perturbation only.
    SensitivityOnly,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::DualSpace, Strategy::Random, Strategy::SensitivityOnly];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::DualSpace => "dual-space",
            Strategy::Random => "random",
            Strategy::SensitivityOnly => "sensitivity-only",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub env: String,
    pub strategy: Strategy,
    pub seed: u64,
    pub n_scenarios: usize,
    pub n_tests: usize,
    pub monitor: MonitorConfig,
    pub generator: GeneratorConfig,
    pub partitions: Vec<usize>,
    /// Base pool capacity; `None` keeps every admitted record.
    pub db_capacity: Option<usize>,
    pub model: ModelConfig,
    pub novelty: NoveltyConfig,
    pub scoring: ScoringConfig,
}

impl CampaignConfig {
    /// Defaults for `env`: its preset sizes, a uniform grid of at most
    /// [`DEFAULT_MAX_CELLS`] cells and a base capacity of four times the
    /// initial pool.
    pub fn for_env(env: &str) -> Result<Self> {
        let e = envs::by_name(env)?;
        let dims = e.bounds().len();
        let m = ScenarioSpec::default_partition(dims, DEFAULT_MAX_CELLS);
        let mut cfg = Self {
            env: env.to_string(),
            strategy: Strategy::DualSpace,
            seed: 0,
            n_scenarios: 0,
            n_tests: 0,
            monitor: MonitorConfig {
                window: 1,
                theta: 0.0,
                hysteresis: 1,
            },
            generator: GeneratorConfig::default(),
            partitions: vec![m; dims],
            db_capacity: None,
            model: ModelConfig::default(),
            novelty: NoveltyConfig::default(),
            scoring: e.scoring().clone(),
        };
        cfg.apply_preset(e.preset());
        Ok(cfg)
    }

    pub fn apply_preset(&mut self, preset: Preset) {
        let v = preset.values();
        self.n_scenarios = v.n_scenarios;
        self.n_tests = v.n_tests;
        self.monitor.window = v.window;
        self.monitor.theta = v.theta;
        self.db_capacity = Some(4 * v.n_scenarios);
    }

    pub fn validate(&self) -> Result<()> {
        let e = envs::by_name(&self.env)?;
        if self.n_tests == 0 {
            return Err(Error::Config("n_tests must be at least 1".into()));
        }
        if self.strategy != Strategy::Random && self.n_scenarios == 0 {
            return Err(Error::Config("n_scenarios must be at least 1".into()));
        }
        if self.partitions.len() != e.bounds().len() {
            return Err(Error::Config(format!(
                "`{}` has {} dimensions but {} partitions were given",
                self.env,
                e.bounds().len(),
                self.partitions.len()
            )));
        }
        if self.db_capacity == Some(0) {
            return Err(Error::Config("db_capacity must be positive".into()));
        }
        ScenarioSpec::new(e.bounds(), self.partitions.clone())?;
        self.monitor.validate()?;
        self.generator.validate()?;
        self.model.validate()?;
        self.novelty.validate()?;
        self.scoring.validate()
    }

    /// Applies `key = value` assignments in order. `env` and `preset` are
    /// applied first so later keys override their defaults.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let env = pairs
            .iter()
            .rev()
            .find(|(k, _)| k == "env")
            .map_or("intercept2d", |(_, v)| v.as_str());
        let mut cfg = Self::for_env(env)?;
        if let Some((_, p)) = pairs.iter().rev().find(|(k, _)| k == "preset") {
            cfg.apply_preset(Preset::parse(p)?);
        }
        for (k, v) in pairs {
            if k != "env" && k != "preset" {
                cfg.set(k, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key. Unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("`{key}`: expected {what}, got `{value}`"));
        let float = || value.parse::<f64>().map_err(|_| bad("a number"));
        let int = || value.parse::<usize>().map_err(|_| bad("a non-negative integer"));
        match key {
            "strategy" => self.strategy = Strategy::parse(value)?,
            "seed" => self.seed = value.parse().map_err(|_| bad("an unsigned integer"))?,
            "n_scenarios" | "db_size" => {
                self.n_scenarios = int()?;
            }
            "n_tests" | "tests" => self.n_tests = int()?,
            "window" => self.monitor.window = int()?,
            "theta" => self.monitor.theta = float()?,
            "hysteresis" => self.monitor.hysteresis = int()?,
            "alpha" => self.generator.alpha = float()?,
            "top_k" => self.generator.top_k = int()?,
            "perturb_scale" => self.generator.perturb_scale = float()?,
            "partitions" => {
                let parts = value
                    .split(',')
                    .map(|p| p.trim().parse::<usize>().map_err(|_| bad("comma-separated cell counts")))
                    .collect::<Result<Vec<_>>>()?;
                self.partitions = if parts.len() == 1 {
                    vec![parts[0]; self.partitions.len()]
                } else {
                    parts
                };
            }
            "db_capacity" => {
                self.db_capacity = if value == "none" { None } else { Some(int()?) };
            }
            "components" => self.model.components = int()?,
            "t0" => self.model.t0 = float()?,
            "kappa" => self.model.kappa = float()?,
            "ridge_rel" => self.model.ridge_rel = float()?,
            "density_floor" => self.model.density_floor = float()?,
            "stride" => self.model.stride = int()?,
            "threshold" => {
                self.novelty.mode = match value.split_once(':') {
                    Some(("quantile", q)) => ThresholdMode::Quantile(q.parse().map_err(|_| bad("quantile:<q>"))?),
                    Some(("fixed", t)) => ThresholdMode::Fixed(t.parse().map_err(|_| bad("fixed:<log-prob>"))?),
                    _ => return Err(bad("quantile:<q> or fixed:<log-prob>")),
                }
            }
            "threshold_window" => self.novelty.window = int()?,
            "gamma" => self.scoring.gamma = float()?,
            "w_dist" => self.scoring.w_dist = float()?,
            "w_vel" => self.scoring.w_vel = float()?,
            "penalty" => self.scoring.penalty = float()?,
            "env" | "preset" => {
                return Err(Error::Config(format!("`{key}` must be applied through from_pairs")));
            }
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// The configuration as `key = value` lines accepted by [`parse_pairs`].
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let threshold = match self.novelty.mode {
            ThresholdMode::Quantile(q) => format!("quantile:{q}"),
            ThresholdMode::Fixed(t) => format!("fixed:{t}"),
        };
        let parts: Vec<String> = self.partitions.iter().map(usize::to_string).collect();
        [
            ("env", self.env.clone()),
            ("strategy", self.strategy.as_str().to_string()),
            ("seed", self.seed.to_string()),
            ("n_scenarios", self.n_scenarios.to_string()),
            ("n_tests", self.n_tests.to_string()),
            ("window", self.monitor.window.to_string()),
            ("theta", self.monitor.theta.to_string()),
            ("hysteresis", self.monitor.hysteresis.to_string()),
            ("alpha", self.generator.alpha.to_string()),
            ("top_k", self.generator.top_k.to_string()),
            ("perturb_scale", self.generator.perturb_scale.to_string()),
            ("partitions", parts.join(",")),
            ("db_capacity", self.db_capacity.map_or("none".into(), |c| c.to_string())),
            ("components", self.model.components.to_string()),
            ("t0", self.model.t0.to_string()),
            ("kappa", self.model.kappa.to_string()),
            ("ridge_rel", self.model.ridge_rel.to_string()),
            ("density_floor", self.model.density_floor.to_string()),
            ("stride", self.model.stride.to_string()),
            ("threshold", threshold),
            ("threshold_window", self.novelty.window.to_string()),
            ("gamma", self.scoring.gamma.to_string()),
            ("w_dist", self.scoring.w_dist.to_string()),
            ("w_vel", self.scoring.w_vel.to_string()),
            ("penalty", self.scoring.penalty.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            reason: format!("expected `key = value`, got `{line}`"),
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn load_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    parse_pairs(&std::fs::read_to_string(path)?)
}
