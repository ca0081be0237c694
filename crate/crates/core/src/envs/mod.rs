//! Environment contract and the built-in environments.
//!
//! An environment maps a scenario (a point of its parameter box) to an
//! episode: per-step observations, the discounted task score and the
//! critical flag. Every built-in environment is a pure function of the
//! scenario.

pub mod corridor;
pub mod intercept;
pub mod oracle;
pub mod walker;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use corridor::CorridorNav;
pub use intercept::Intercept2d;
pub use walker::Walker1d;

use crate::error::{Error, Result};
use crate::novelty::Trajectory;

/// Version stamp of the published environment constants.
pub const CONSTANTS_VERSION: u32 = 1;

/// Violated critical constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    Collision,
    Fall,
    /// Task not completed within the step budget.
    Timeout,
}

impl Constraint {
    pub fn as_str(self) -> &'static str {
        match self {
            Constraint::Collision => "collision",
            Constraint::Fall => "fall",
            Constraint::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepObservation {
    pub state: Vec<f64>,
    /// Task-relevant distance (separation or distance to goal).
    pub distance: f64,
    /// Deviation from the commanded speed.
    pub speed_error: f64,
    pub violation: Option<Constraint>,
}

impl StepObservation {
    pub fn new(state: Vec<f64>, distance: f64, speed_error: f64, violation: Option<Constraint>) -> Self {
        Self {
            state,
            distance,
            speed_error,
            violation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub steps: Vec<StepObservation>,
    pub score: f64,
    pub critical: bool,
}

impl Episode {
    pub fn trajectory(&self) -> Trajectory {
        Trajectory {
            states: self.steps.iter().map(|s| s.state.clone()).collect(),
        }
    }

    pub fn violations(&self) -> Vec<Constraint> {
        let mut v: Vec<Constraint> = self.steps.iter().filter_map(|s| s.violation).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Per-step dump: `t, state..., d_t, dv_t, violation`.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        let d = self.steps.first().map_or(0, |s| s.state.len());
        let mut header = vec!["t".to_string()];
        header.extend((0..d).map(|i| format!("s{i}")));
        header.extend(["d".into(), "dv".into(), "violation".into()]);
        writeln!(out, "{}", header.join(","))?;
        for (t, s) in self.steps.iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(s.state.iter().map(|v| format!("{v:.16e}")));
            row.push(format!("{:.16e}", s.distance));
            row.push(format!("{:.16e}", s.speed_error));
            row.push(s.violation.map_or("none", Constraint::as_str).to_string());
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringConfig {
    pub gamma: f64,
    pub w_dist: f64,
    pub w_vel: f64,
    /// Penalty per distinct violated constraint.
    pub penalty: f64,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            w_dist: 1.0,
            w_vel: 0.1,
            penalty: 50.0,
        }
    }
}

impl ScoringConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config(format!("gamma {} must lie in (0, 1]", self.gamma)));
        }
        if self.w_dist < 0.0 || self.w_vel < 0.0 || self.penalty < 0.0 {
            return Err(Error::Config("scoring weights and penalty must be non-negative".into()));
        }
        Ok(())
    }
}

/// Discounted distance and speed-tracking score minus one penalty per
/// distinct violated constraint.
pub fn task_score<F, G>(steps: &[StepObservation], cfg: &ScoringConfig, f: F, g: G) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let mut discount = 1.0;
    let mut total = 0.0;
    for s in steps {
        total += discount * (cfg.w_dist * f(s.distance) + cfg.w_vel * g(s.speed_error));
        discount *= cfg.gamma;
    }
    let mut violated: Vec<Constraint> = steps.iter().filter_map(|s| s.violation).collect();
    violated.sort();
    violated.dedup();
    total - cfg.penalty * violated.len() as f64
}

/// Campaign sizing defaults modelled on published benchmark settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    AcasxuLike,
    CoopnaviLike,
    BipedalLike,
    CarlaRlLike,
    CarlaIlLike,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PresetValues {
    pub n_scenarios: usize,
    pub n_tests: usize,
    pub window: usize,
    pub theta: f64,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::AcasxuLike,
        Preset::CoopnaviLike,
        Preset::BipedalLike,
        Preset::CarlaRlLike,
        Preset::CarlaIlLike,
    ];

    pub fn values(self) -> PresetValues {
        let (n_scenarios, n_tests, window, theta) = match self {
            Preset::AcasxuLike => (2000, 100_000, 1000, 0.001),
            Preset::CoopnaviLike => (1000, 10_000, 1000, 0.13),
            Preset::BipedalLike => (1000, 1000, 100, 0.14),
            Preset::CarlaRlLike => (100, 600, 100, 0.1),
            Preset::CarlaIlLike => (100, 600, 100, 0.2),
        };
        PresetValues {
            n_scenarios,
            n_tests,
            window,
            theta,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::AcasxuLike => "acasxu-like",
            Preset::CoopnaviLike => "coopnavi-like",
            Preset::BipedalLike => "bipedal-like",
            Preset::CarlaRlLike => "carla-rl-like",
            Preset::CarlaIlLike => "carla-il-like",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "carla-like" => Ok(Preset::CarlaRlLike),
            _ => Self::ALL
                .into_iter()
                .find(|p| p.name() == s)
                .ok_or_else(|| Error::Config(format!("unknown preset `{s}`"))),
        }
    }
}

pub trait Environment: Send + Sync {
    fn name(&self) -> &'static str;

    fn bounds(&self) -> Vec<(f64, f64)>;

    /// Dimensions that carry a meaningful distance.
    fn metric_dims(&self) -> Vec<bool> {
        vec![true; self.bounds().len()]
    }

    fn scoring(&self) -> &ScoringConfig;

    fn preset(&self) -> Preset;

    /// Recommended novelty-model state stride for this environment.
    fn feature_stride(&self) -> usize {
        1
    }

    fn run(&self, params: &[f64]) -> Result<Episode>;

    /// `key = value` lines describing every simulation constant.
    fn constants(&self) -> Vec<(&'static str, f64)>;
}

pub(crate) fn check_params(env: &dyn Environment, params: &[f64]) -> Result<()> {
    let bounds = env.bounds();
    let ok = params.len() == bounds.len()
        && params
            .iter()
            .zip(&bounds)
            .all(|(v, &(a, b))| *v >= a && *v <= b);
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "scenario {params:?} is outside the `{}` parameter box",
            env.name()
        )))
    }
}

pub const ENV_NAMES: [&str; 3] = ["intercept2d", "corridor_nav", "walker1d"];

pub fn by_name(name: &str) -> Result<Box<dyn Environment>> {
    build(name, ScoringConfig::default())
}

/// Built-in environment `name` with the given scoring constants.
pub fn build(name: &str, scoring: ScoringConfig) -> Result<Box<dyn Environment>> {
    scoring.validate()?;
    Ok(match name {
        "intercept2d" => Box::new(Intercept2d::new().with_scoring(scoring)),
        "corridor_nav" => Box::new(CorridorNav::new().with_scoring(scoring)),
        "walker1d" => Box::new(Walker1d::new().with_scoring(scoring)),
        _ => return Err(Error::Config(format!("unknown environment `{name}`"))),
    })
}

/// The versioned constants file shared by oracles and fixtures.
pub fn constants_file() -> String {
    let mut out = format!("# environment constants\nversion = {CONSTANTS_VERSION}\n");
    for name in ENV_NAMES {
        let env = by_name(name).expect("built-in");
        out.push_str(&format!("\n[{name}]\n"));
        let sc = env.scoring();
        for (k, v) in [
            ("gamma", sc.gamma),
            ("w_dist", sc.w_dist),
            ("w_vel", sc.w_vel),
            ("penalty", sc.penalty),
        ] {
            out.push_str(&format!("{k} = {v}\n"));
        }
        for (k, v) in env.constants() {
            out.push_str(&format!("{k} = {v}\n"));
        }
    }
    out
}

/// Score of an absorbing goal state held from step `from` to `max_steps`:
/// full distance score, no speed error.
pub fn goal_tail(cfg: &ScoringConfig, from: usize, max_steps: usize) -> f64 {
    (from..=max_steps).map(|t| cfg.gamma.powi(t as i32) * cfg.w_dist).sum()
}

/// Upper bound of any episode score: full distance score on every step.
pub fn score_upper_bound(cfg: &ScoringConfig, max_steps: usize) -> f64 {
    goal_tail(cfg, 0, max_steps)
}

/// `min(d, cap) / cap`.
pub(crate) fn capped_separation(d: f64, cap: f64) -> f64 {
    d.min(cap) / cap
}

/// `1 - min(d, d0) / d0`, or 1 when the start already is the goal.
pub(crate) fn progress(d: f64, d0: f64) -> f64 {
    if d0 <= 0.0 {
        1.0
    } else {
        1.0 - d.min(d0) / d0
    }
}

pub(crate) fn speed_penalty(dv: f64) -> f64 {
    -dv.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(d: f64, violation: Option<Constraint>) -> StepObservation {
        StepObservation::new(vec![0.0], d, 0.0, violation)
    }

    fn cfg(gamma: f64, penalty: f64) -> ScoringConfig {
        ScoringConfig {
            gamma,
            w_dist: 1.0,
            w_vel: 0.0,
            penalty,
        }
    }

    #[test]
    fn task_score_examples() {
        let id = |d: f64| d;
        let t = task_score(&[step(0.7, None)], &cfg(1.0, 10.0), id, speed_penalty);
        assert!((t - 0.7).abs() < 1e-15);
        let t = task_score(&[step(0.7, Some(Constraint::Collision))], &cfg(1.0, 10.0), id, speed_penalty);
        assert!((t + 9.3).abs() < 1e-12);
        let t = task_score(&[step(1.0, None), step(1.0, None)], &cfg(0.9, 10.0), id, speed_penalty);
        assert!((t - 1.9).abs() < 1e-15);
    }

    #[test]
    fn penalty_applies_once_per_constraint() {
        let id = |d: f64| d;
        let steps = vec![
            step(0.0, Some(Constraint::Collision)),
            step(0.0, Some(Constraint::Collision)),
            step(0.0, Some(Constraint::Timeout)),
        ];
        assert_eq!(task_score(&steps, &cfg(1.0, 10.0), id, speed_penalty), -20.0);
    }

    #[test]
    fn goal_tail_is_geometric() {
        let c = cfg(0.5, 0.0);
        assert!((goal_tail(&c, 1, 3) - (0.5 + 0.25 + 0.125)).abs() < 1e-15);
        assert_eq!(goal_tail(&c, 4, 3), 0.0);
    }

    #[test]
    fn presets_match_reference_settings() {
        let a = Preset::AcasxuLike.values();
        assert_eq!((a.n_scenarios, a.n_tests, a.window, a.theta), (2000, 100_000, 1000, 0.001));
        assert_eq!(Preset::parse("carla-like").unwrap().values().n_scenarios, 100);
        assert_eq!(Preset::parse("coopnavi-like").unwrap().values().theta, 0.13);
        assert!(Preset::parse("nope").is_err());
    }

    #[test]
    fn committed_constants_file_is_current() {
        let committed = include_str!("../../env_constants.toml");
        assert_eq!(committed, constants_file());
    }

    #[test]
    fn unknown_environment_rejected() {
        assert!(by_name("cartpole").is_err());
        for n in ENV_NAMES {
            assert_eq!(by_name(n).unwrap().name(), n);
        }
    }
}
