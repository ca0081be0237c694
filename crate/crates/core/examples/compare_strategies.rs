//! Runs the three strategies with the same budget and prints the comparison
//! table.

use dualfuzz::harness::{compare_strategies, CampaignConfig};

fn main() -> dualfuzz::Result<()> {
    let mut cfg = CampaignConfig::for_env("intercept2d")?;
    cfg.n_tests = 2000;
    cfg.monitor.window = 100;
    cfg.monitor.theta = 0.13;
    let (_, table) = compare_strategies(&cfg)?;
    println!("{:<18}{:>9}{:>10}{:>10}{:>12}", "strategy", "critical", "coverage", "hybrid", "gain %");
    for r in &table.rows {
        println!(
            "{:<18}{:>9}{:>10}{:>10.3}{:>12.1}",
            r.label, r.critical_count, r.coverage, r.hybrid_score, r.critical_gain_pct
        );
    }
    Ok(())
}
