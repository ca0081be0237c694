use std::fs;
use std::io::BufReader;
use std::process::Command;

use dualfuzz::database::ScenarioDatabase;
use dualfuzz::envs::oracle;
use dualfuzz::harness::{run_campaign, run_random, sweep_alpha, CampaignConfig, Strategy, ALPHA_SWEEP};

fn config(env: &str, strategy: Strategy, n_tests: usize, seed: u64) -> CampaignConfig {
    let mut cfg = CampaignConfig::for_env(env).unwrap();
    cfg.strategy = strategy;
    cfg.n_tests = n_tests;
    cfg.seed = seed;
    cfg
}

#[test]
fn random_walker_matches_critical_measure() {
    let r = run_random(&config("walker1d", Strategy::Random, 10_000, 5)).unwrap();
    let frac = r.report.critical_count as f64 / r.report.test_runs as f64;
    let exact = oracle::walker_exact_fraction(4000);
    assert!((frac - exact).abs() < 0.02, "{frac} vs {exact}");
    assert_eq!(r.report.init_runs, 0);
}

#[test]
fn random_coverage_grows_with_budget() {
    let mut last = 0;
    for n in [200, 800, 3200] {
        let c = run_random(&config("intercept2d", Strategy::Random, n, 9)).unwrap();
        assert!(c.report.diversity.coverage >= last);
        last = c.report.diversity.coverage;
    }
    assert!(last > 0);
}

#[test]
fn alpha_sweep_has_one_row_per_setting() {
    let mut cfg = config("corridor_nav", Strategy::DualSpace, 60, 2);
    cfg.n_scenarios = 40;
    cfg.monitor.window = 10;
    cfg.monitor.theta = 0.5;
    let (campaigns, table) = sweep_alpha(&cfg).unwrap();
    assert_eq!(table.rows.len(), ALPHA_SWEEP.len());
    for (c, a) in campaigns.iter().zip(ALPHA_SWEEP) {
        assert_eq!(c.report.config.generator.alpha, a);
    }
    assert_eq!(table.to_csv().lines().count(), ALPHA_SWEEP.len() + 1);
}

#[test]
fn database_checkpoint_reloads() {
    let mut cfg = config("walker1d", Strategy::DualSpace, 100, 4);
    cfg.n_scenarios = 50;
    let c = run_campaign(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    c.write(dir.path()).unwrap();
    let f = fs::File::open(dir.path().join("db.jsonl")).unwrap();
    let db = ScenarioDatabase::load(BufReader::new(f)).unwrap();
    assert_eq!(db.base(), c.db.base());
    assert_eq!(db.critical(), c.db.critical());
}

#[test]
fn cli_run_writes_consistent_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let status = Command::new(env!("CARGO_BIN_EXE_dualfuzz"))
        .args(["run", "--env", "corridor_nav", "--seed", "3", "--tests", "80", "--db-size", "30"])
        .args(["--window", "20", "--theta", "0.2", "--alpha", "0.6", "--partitions", "3"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    for f in ["report.json", "log.csv", "db.jsonl", "grid.jsonl", "model.txt"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let log = fs::read_to_string(out.join("log.csv")).unwrap();
    let header: Vec<&str> = log.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "critical").unwrap();
    let critical_lines = log.lines().skip(1).filter(|l| l.split(',').nth(col) == Some("1")).count();
    assert_eq!(log.lines().count(), 81);
    assert_eq!(report["critical_count"].as_u64().unwrap() as usize, critical_lines);
    assert_eq!(report["config"]["generator"]["alpha"].as_f64().unwrap(), 0.6);
}

#[test]
fn cli_rejects_bad_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_dualfuzz"))
        .args(["run", "--env", "walker1d", "--tests", "0", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!status.status.success());
    assert!(String::from_utf8_lossy(&status.stderr).contains("n_tests"));
}
