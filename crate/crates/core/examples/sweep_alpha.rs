//! Sweeps the exploration factor alpha and ranks the settings by hybrid
//! score.

use dualfuzz::harness::{sweep_alpha, CampaignConfig};

fn main() -> dualfuzz::Result<()> {
    let mut cfg = CampaignConfig::for_env("intercept2d")?;
    cfg.n_tests = 1500;
    cfg.monitor.window = 100;
    cfg.monitor.theta = 0.13;
    let (_, table) = sweep_alpha(&cfg)?;
    print!("{}", table.to_csv());
    let best = table
        .rows
        .iter()
        .max_by(|a, b| a.hybrid_score.total_cmp(&b.hybrid_score))
        .expect("six rows");
    println!("best: {}", best.label);
    Ok(())
}
