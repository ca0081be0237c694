//! Side-by-side comparison of campaigns on one environment and budget.

use std::thread;

use serde::{Deserialize, Serialize};

use super::campaign::{run_campaign, Campaign, CampaignReport};
use super::config::{CampaignConfig, Strategy};
use super::output::num;
use crate::error::{Error, Result};
use crate::metrics::{hybrid_score_with_inverse, inverse_traj, MetricRow};

/// Alpha values of the published sweep.
pub const ALPHA_SWEEP: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub critical_count: u64,
    pub coverage: u64,
    pub distance: Option<f64>,
    pub traj: f64,
    pub log_traj: f64,
    pub hybrid_score: f64,
    /// Relative change of the critical count against the first row, in percent.
    pub critical_gain_pct: f64,
    /// Relative change of the coverage against the first row, in percent.
    pub coverage_gain_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub env: String,
    pub n_tests: usize,
    pub rows: Vec<ComparisonRow>,
    /// Set when linear trajectory similarity underflowed or overflowed and
    /// the inverse column was ranked by `-log_traj` instead.
    pub log_traj_fallback: bool,
}

fn gain(x: f64, reference: f64) -> f64 {
    if x == reference {
        0.0
    } else if reference == 0.0 {
        f64::INFINITY
    } else {
        100.0 * (x - reference) / reference
    }
}

/// Comparison table over `reports`, labelled by `labels`. The first report
/// is the reference for the relative gains.
pub fn compare_campaigns(reports: &[&CampaignReport], labels: &[String]) -> Result<ComparisonTable> {
    if reports.len() < 2 {
        return Err(Error::InvalidInput("comparison needs at least two reports".into()));
    }
    if labels.len() != reports.len() {
        return Err(Error::InvalidInput("one label per report is required".into()));
    }
    let first = reports[0];
    for r in reports {
        if r.config.env != first.config.env || r.config.n_tests != first.config.n_tests {
            return Err(Error::InvalidInput(format!(
                "cannot compare `{}` with {} tests against `{}` with {} tests",
                r.config.env, r.config.n_tests, first.config.env, first.config.n_tests
            )));
        }
    }
    let log_traj_fallback = reports
        .iter()
        .any(|r| !(r.diversity.traj > 0.0 && r.diversity.traj.is_finite()) && r.diversity.log_traj.is_finite());
    let rows: Vec<MetricRow> = reports.iter().map(|r| r.diversity.row()).collect();
    let inverse: Vec<f64> = reports
        .iter()
        .map(|r| {
            if log_traj_fallback {
                // -ln traj orders rows the same way as 1 / traj
                -r.diversity.log_traj
            } else {
                inverse_traj(r.diversity.traj)
            }
        })
        .map(|v| if v.is_finite() { v } else { f64::MAX })
        .collect();
    let scores = hybrid_score_with_inverse(&rows, &inverse)?;
    let base = &reports[0].diversity;
    let table_rows = reports
        .iter()
        .zip(labels)
        .zip(scores)
        .map(|((r, label), hybrid)| {
            let d = &r.diversity;
            ComparisonRow {
                label: label.clone(),
                critical_count: r.critical_count,
                coverage: d.coverage,
                distance: d.distance,
                traj: d.traj,
                log_traj: d.log_traj,
                hybrid_score: hybrid,
                critical_gain_pct: gain(r.critical_count as f64, reports[0].critical_count as f64),
                coverage_gain_pct: gain(d.coverage as f64, base.coverage as f64),
            }
        })
        .collect();
    Ok(ComparisonTable {
        env: first.config.env.clone(),
        n_tests: first.config.n_tests,
        rows: table_rows,
        log_traj_fallback,
    })
}

impl ComparisonTable {
    /// `metrics.csv` contents.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "label,critical_count,coverage,distance,traj,log_traj,hybrid_score,critical_gain_pct,coverage_gain_pct\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.label,
                r.critical_count,
                r.coverage,
                r.distance.map_or("none".into(), num),
                num(r.traj),
                num(r.log_traj),
                num(r.hybrid_score),
                num(r.critical_gain_pct),
                num(r.coverage_gain_pct),
            ));
        }
        out
    }
}

/// Runs every configuration on its own thread. Results keep input order.
pub fn run_all(configs: &[CampaignConfig]) -> Result<Vec<Campaign>> {
    thread::scope(|s| {
        let handles: Vec<_> = configs.iter().map(|c| s.spawn(move || run_campaign(c))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("campaign thread panicked"))
            .collect()
    })
}

/// All three strategies on `cfg`, compared against the first (dual-space).
pub fn compare_strategies(cfg: &CampaignConfig) -> Result<(Vec<Campaign>, ComparisonTable)> {
    let configs: Vec<CampaignConfig> = Strategy::ALL
        .iter()
        .map(|&strategy| CampaignConfig { strategy, ..cfg.clone() })
        .collect();
    let campaigns = run_all(&configs)?;
    let labels: Vec<String> = Strategy::ALL.iter().map(|s| s.as_str().to_string()).collect();
    let reports: Vec<&CampaignReport> = campaigns.iter().map(|c| &c.report).collect();
    let table = compare_campaigns(&reports, &labels)?;
    Ok((campaigns, table))
}

/// Dual-space campaigns for each alpha in [`ALPHA_SWEEP`].
pub fn sweep_alpha(cfg: &CampaignConfig) -> Result<(Vec<Campaign>, ComparisonTable)> {
    let configs: Vec<CampaignConfig> = ALPHA_SWEEP
        .iter()
        .map(|&alpha| {
            let mut c = cfg.clone();
            c.strategy = Strategy::DualSpace;
            c.generator.alpha = alpha;
            c
        })
        .collect();
    let campaigns = run_all(&configs)?;
    let labels: Vec<String> = ALPHA_SWEEP.iter().map(|a| format!("alpha={a}")).collect();
    let reports: Vec<&CampaignReport> = campaigns.iter().map(|c| &c.report).collect();
    let table = compare_campaigns(&reports, &labels)?;
    Ok((campaigns, table))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::DiversityReport;

    fn report(critical: u64, coverage: u64, distance: f64, traj: f64) -> CampaignReport {
        let cfg = CampaignConfig::for_env("walker1d").unwrap();
        CampaignReport {
            version: "test".into(),
            constants_version: 1,
            config: cfg,
            init_runs: 0,
            init_critical_count: 0,
            test_runs: 0,
            critical_count: critical,
            diversity: DiversityReport {
                critical_count: critical,
                coverage,
                distance: Some(distance),
                traj,
                log_traj: traj.ln(),
                warnings: vec![],
            },
            mode_counts: Default::default(),
            branch_counts: Default::default(),
            admission_counts: Default::default(),
            base_pool_size: 0,
            log_file: String::new(),
            wall_clock_secs: 0.0,
        }
    }

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("r{i}")).collect()
    }

    #[test]
    fn self_comparison_has_zero_gain() {
        let r = report(10, 4, 2.0, 0.3);
        let t = compare_campaigns(&[&r, &r], &labels(2)).unwrap();
        for row in &t.rows {
            assert_eq!(row.critical_gain_pct, 0.0);
            assert_eq!(row.coverage_gain_pct, 0.0);
            assert_eq!(row.hybrid_score, 0.5);
        }
    }

    #[test]
    fn dominating_report_scores_one() {
        let a = report(20, 8, 3.0, 0.1);
        let b = report(10, 4, 2.0, 0.3);
        let t = compare_campaigns(&[&a, &b], &labels(2)).unwrap();
        assert_eq!(t.rows[0].hybrid_score, 1.0);
        assert_eq!(t.rows[1].hybrid_score, 0.0);
        assert_eq!(t.rows[1].critical_gain_pct, -50.0);
    }

    #[test]
    fn mismatched_budgets_rejected() {
        let a = report(20, 8, 3.0, 0.1);
        let mut b = report(10, 4, 2.0, 0.3);
        b.config.n_tests += 1;
        assert!(compare_campaigns(&[&a, &b], &labels(2)).is_err());
        assert!(compare_campaigns(&[&a], &labels(1)).is_err());
    }

    #[test]
    fn underflowed_similarity_ranks_by_log() {
        let mut a = report(10, 4, 2.0, 0.0);
        a.diversity.log_traj = -900.0;
        let mut b = report(10, 4, 2.0, 0.0);
        b.diversity.log_traj = -800.0;
        let t = compare_campaigns(&[&a, &b], &labels(2)).unwrap();
        assert!(t.log_traj_fallback);
        assert!(t.rows[0].hybrid_score > t.rows[1].hybrid_score);
    }

    #[test]
    fn overflowed_similarity_ranks_by_log() {
        let mut a = report(10, 4, 2.0, f64::INFINITY);
        a.diversity.log_traj = 800.0;
        let mut b = report(10, 4, 2.0, 1e300);
        b.diversity.log_traj = 1e300f64.ln();
        let t = compare_campaigns(&[&a, &b], &labels(2)).unwrap();
        assert!(t.log_traj_fallback);
        assert!(t.rows[1].hybrid_score > t.rows[0].hybrid_score);
    }
}
