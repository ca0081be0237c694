//! The campaign loop and its two baselines.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{CampaignConfig, Strategy};
use super::output::{num, opt_num, to_json};
use crate::database::{sensitivity, uniform_scenario, Admission, Origin, ScenarioDatabase};
use crate::envs::{self, Environment, Episode, CONSTANTS_VERSION};
use crate::error::{Error, Result};
use crate::generator::{explore_global, perturb_local, Branch, Mode, WindowMonitor};
use crate::metrics::DiversityReport;
use crate::novelty::{GmmNoveltyModel, ThresholdTracker, Trajectory};
use crate::rng::CampaignRng;
use crate::space::{Scenario, ScenarioSpec, SubspaceGrid};

/// One campaign iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLine {
    pub iteration: usize,
    /// `local`, `global` or `uniform`.
    pub mode: String,
    pub branch: Branch,
    pub base_id: Option<u64>,
    pub cell: u64,
    pub critical: bool,
    pub score: f64,
    pub log_prob: Option<f64>,
    pub threshold: f64,
    /// Window efficiency reading that chose the mode.
    pub efficiency: f64,
    pub admission: Option<Admission>,
    pub scenario: Vec<f64>,
}

impl LogLine {
    pub fn header(dims: usize) -> String {
        let mut cols: Vec<String> = [
            "iteration",
            "mode",
            "branch",
            "base_id",
            "cell",
            "critical",
            "score",
            "log_prob",
            "threshold",
            "efficiency",
            "admission",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        cols.extend((0..dims).map(|i| format!("p{i}")));
        cols.join(",")
    }

    pub fn to_csv(&self) -> String {
        let mut cols = vec![
            self.iteration.to_string(),
            self.mode.clone(),
            self.branch.as_str().to_string(),
            self.base_id.map_or("none".into(), |b| b.to_string()),
            self.cell.to_string(),
            u8::from(self.critical).to_string(),
            num(self.score),
            opt_num(self.log_prob),
            num(self.threshold),
            num(self.efficiency),
            self.admission.map_or("none", Admission::as_str).to_string(),
        ];
        cols.extend(self.scenario.iter().map(|&v| num(v)));
        cols.join(",")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub version: String,
    pub constants_version: u32,
    pub config: CampaignConfig,
    pub init_runs: usize,
    pub init_critical_count: u64,
    pub test_runs: usize,
    /// Critical scenarios found during the test loop.
    pub critical_count: u64,
    pub diversity: DiversityReport,
    pub mode_counts: BTreeMap<String, u64>,
    pub branch_counts: BTreeMap<String, u64>,
    pub admission_counts: BTreeMap<String, u64>,
    pub base_pool_size: usize,
    pub log_file: String,
    /// Seconds spent in the campaign; kept out of `report.json`.
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

/// Everything a finished campaign leaves behind.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub report: CampaignReport,
    pub log: Vec<LogLine>,
    pub db: ScenarioDatabase,
    pub grid: SubspaceGrid,
    pub model: GmmNoveltyModel,
    /// Critical scenarios of the test loop, in discovery order.
    pub critical: Vec<Scenario>,
}

impl Campaign {
    pub fn log_csv(&self) -> String {
        let mut out = LogLine::header(self.grid.spec().dims());
        out.push('\n');
        for l in &self.log {
            out.push_str(&l.to_csv());
            out.push('\n');
        }
        out
    }

    /// Writes `report.json`, `log.csv`, `db.jsonl`, `grid.jsonl`,
    /// `model.txt` and `timing.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), to_json(&self.report)?)?;
        fs::write(dir.join("log.csv"), self.log_csv())?;
        self.db.save(BufWriter::new(File::create(dir.join("db.jsonl"))?))?;
        self.grid.export(BufWriter::new(File::create(dir.join("grid.jsonl"))?))?;
        self.model.save(BufWriter::new(File::create(dir.join("model.txt"))?))?;
        let mut t = File::create(dir.join("timing.json"))?;
        writeln!(t, "{{\"wall_clock_secs\": {}}}", self.report.wall_clock_secs)?;
        Ok(())
    }
}

fn env_error(env: &dyn Environment, s: &Scenario, iteration: Option<usize>, e: Error) -> Error {
    let at = iteration.map_or("during initialisation".to_string(), |i| format!("at iteration {i}"));
    Error::Environment {
        env: env.name().to_string(),
        scenario: s.params().to_vec(),
        reason: format!("{at}: {e}"),
    }
}

fn bump(map: &mut BTreeMap<String, u64>, key: &str) {
    *map.entry(key.to_string()).or_default() += 1;
}

/// Runs the campaign described by `cfg` with its configured strategy.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<Campaign> {
    cfg.validate()?;
    let started = Instant::now();
    let env = envs::build(&cfg.env, cfg.scoring.clone())?;
    let env = env.as_ref();
    let spec = ScenarioSpec::new(env.bounds(), cfg.partitions.clone())?;
    let mut rngs = CampaignRng::new(cfg.seed);
    let mut model_cfg = cfg.model.clone();
    model_cfg.seed = cfg.seed;
    let mut model = GmmNoveltyModel::new(model_cfg)?;
    let mut tracker = ThresholdTracker::new(cfg.novelty.clone());
    let mut monitor = WindowMonitor::new(cfg.monitor.clone())?;
    let mut grid = SubspaceGrid::new(spec.clone());

    let mut db = ScenarioDatabase::new(cfg.db_capacity);
    let mut init_runs = 0;
    let mut init_critical_count = 0;
    if cfg.strategy != Strategy::Random {
        let (d, episodes) = ScenarioDatabase::init(env, &spec, cfg.n_scenarios, cfg.db_capacity, &mut rngs.init)?;
        db = d;
        for ep in &episodes {
            absorb(&mut model, &mut tracker, &ep.trajectory())?;
        }
        init_runs = episodes.len();
        init_critical_count = episodes.iter().filter(|e| e.critical).count() as u64;
    }

    let mut log = Vec::with_capacity(cfg.n_tests);
    let mut critical = Vec::new();
    let mut critical_traj = Vec::new();
    let mut mode_counts = BTreeMap::new();
    let mut branch_counts = BTreeMap::new();
    let mut admission_counts = BTreeMap::new();

    for iteration in 0..cfg.n_tests {
        let efficiency = monitor.reading();
        let mode = match cfg.strategy {
            Strategy::DualSpace => Some(monitor.choose_mode()),
            Strategy::SensitivityOnly => Some(Mode::LocalPerturbation),
            Strategy::Random => None,
        };
        let (scenario, branch, base) = match mode {
            Some(Mode::LocalPerturbation) => {
                let b = db.select_base_local(&mut rngs.base)?;
                let base = (b.id, b.task_score, b.scenario.clone());
                let s = perturb_local(&spec, &base.2, &cfg.generator, &mut rngs.perturb);
                (s, Branch::Local, Some(base))
            }
            Some(Mode::GlobalExploration) => {
                let e = explore_global(&grid, &cfg.generator, &mut rngs.explore);
                (e.scenario, e.branch, None)
            }
            None => (uniform_scenario(&spec, &mut rngs.baseline), Branch::Uniform, None),
        };
        let cell = spec.abstract_scenario(&scenario)?;
        let ep: Episode = env
            .run(scenario.params())
            .map_err(|e| env_error(env, &scenario, Some(iteration), e))?;
        let traj = ep.trajectory();
        let log_prob = if model.is_fitted() {
            Some(model.trajectory_log_prob(&traj)?)
        } else {
            None
        };
        let threshold = tracker.threshold();

        let admission = if cfg.strategy == Strategy::Random {
            None
        } else {
            let origin = match &base {
                Some((id, score, b)) => {
                    if b != &scenario {
                        let sigma = sensitivity(*score, ep.score, b, &scenario)?;
                        db.update_sensitivity(*id, sigma);
                    }
                    Origin::Perturbed(*id)
                }
                None => Origin::Explored,
            };
            let rec = db.new_record(scenario.clone(), &ep, log_prob, origin);
            Some(db.maybe_admit(rec, base.as_ref().map(|b| b.1), threshold))
        };

        model.fit_online(&traj)?;
        if let Some(lp) = log_prob {
            tracker.push(lp);
        }
        grid.record_test(&cell, ep.critical);
        monitor.push(ep.critical);
        if ep.critical {
            critical.push(scenario.clone());
            critical_traj.push(traj);
        }

        let mode_name = match mode {
            Some(Mode::LocalPerturbation) => "local",
            Some(Mode::GlobalExploration) => "global",
            None => "uniform",
        };
        bump(&mut mode_counts, mode_name);
        bump(&mut branch_counts, branch.as_str());
        if let Some(a) = admission {
            bump(&mut admission_counts, a.as_str());
        }
        log.push(LogLine {
            iteration,
            mode: mode_name.to_string(),
            branch,
            base_id: base.as_ref().map(|b| b.0),
            cell: cell.label,
            critical: ep.critical,
            score: ep.score,
            log_prob,
            threshold,
            efficiency,
            admission,
            scenario: scenario.params().to_vec(),
        });
    }

    let diversity = DiversityReport::compute(&spec, &critical, &critical_traj, &env.metric_dims(), &model)?;
    let report = CampaignReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        constants_version: CONSTANTS_VERSION,
        config: cfg.clone(),
        init_runs,
        init_critical_count,
        test_runs: cfg.n_tests,
        critical_count: critical.len() as u64,
        diversity,
        mode_counts,
        branch_counts,
        admission_counts,
        base_pool_size: db.base().len(),
        log_file: "log.csv".into(),
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    Ok(Campaign {
        report,
        log,
        db,
        grid,
        model,
        critical,
    })
}

/// Scores `traj` against the current model (feeding the threshold window)
/// and then fits it.
fn absorb(model: &mut GmmNoveltyModel, tracker: &mut ThresholdTracker, traj: &Trajectory) -> Result<()> {
    if model.is_fitted() {
        tracker.push(model.trajectory_log_prob(traj)?);
    }
    model.fit_online(traj)
}

fn with_strategy(cfg: &CampaignConfig, s: Strategy) -> CampaignConfig {
    CampaignConfig {
        strategy: s,
        ..cfg.clone()
    }
}

/// The full loop: window-driven switching between local perturbation and
/// global exploration.
pub fn run_dualspace(cfg: &CampaignConfig) -> Result<Campaign> {
    run_campaign(&with_strategy(cfg, Strategy::DualSpace))
}

/// Uniform sampling over the whole box for `n_tests` iterations.
pub fn run_random(cfg: &CampaignConfig) -> Result<Campaign> {
    run_campaign(&with_strategy(cfg, Strategy::Random))
}

/// The full loop with global exploration disabled.
pub fn run_sensitivity_only(cfg: &CampaignConfig) -> Result<Campaign> {
    run_campaign(&with_strategy(cfg, Strategy::SensitivityOnly))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(env: &str) -> CampaignConfig {
        let mut c = CampaignConfig::for_env(env).unwrap();
        c.n_scenarios = 20;
        c.n_tests = 60;
        c.db_capacity = Some(80);
        c.monitor.window = 10;
        c.monitor.theta = 0.2;
        c
    }

    #[test]
    fn budget_and_conservation() {
        for strategy in Strategy::ALL {
            let mut cfg = small("walker1d");
            cfg.strategy = strategy;
            let c = run_campaign(&cfg).unwrap();
            assert_eq!(c.log.len(), 60);
            assert_eq!(c.grid.total_tests(), 60);
            assert_eq!(c.report.critical_count, c.grid.total_critical());
            assert_eq!(c.report.critical_count as usize, c.log.iter().filter(|l| l.critical).count());
            let expected_init = if strategy == Strategy::Random { 0 } else { 20 };
            assert_eq!(c.report.init_runs, expected_init);
        }
    }

    #[test]
    fn zero_tests_rejected() {
        let mut cfg = small("walker1d");
        cfg.n_tests = 0;
        assert!(run_campaign(&cfg).is_err());
    }

    #[test]
    fn sensitivity_only_never_explores() {
        let c = run_sensitivity_only(&small("intercept2d")).unwrap();
        assert!(c.log.iter().all(|l| l.mode == "local" && l.branch == Branch::Local));
    }

    #[test]
    fn theta_zero_matches_sensitivity_only() {
        let mut cfg = small("corridor_nav");
        cfg.monitor.theta = 0.0;
        let a = run_dualspace(&cfg).unwrap();
        let b = run_sensitivity_only(&cfg).unwrap();
        assert_eq!(a.log_csv(), b.log_csv());
    }

    #[test]
    fn admitted_records_satisfy_the_rule() {
        let c = run_dualspace(&small("intercept2d")).unwrap();
        for l in &c.log {
            match l.admission {
                Some(Admission::LowerScore) => assert!(!l.critical),
                Some(Admission::Novel) => {
                    assert!(!l.critical);
                    assert!(l.log_prob.is_none_or(|lp| lp < l.threshold));
                }
                Some(Admission::Archived) => assert!(l.critical),
                _ => {}
            }
        }
    }
}
