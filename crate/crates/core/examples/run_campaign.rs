//! Runs one fuzzing campaign and writes its artifacts.
//!
//! `cargo run --release --example run_campaign -- [env] [tests] [out]`

use dualfuzz::harness::{run_campaign, CampaignConfig};

fn main() -> dualfuzz::Result<()> {
    let mut args = std::env::args().skip(1);
    let env = args.next().unwrap_or_else(|| "corridor_nav".into());
    let mut cfg = CampaignConfig::for_env(&env)?;
    cfg.n_tests = args.next().map_or(Ok(500), |t| t.parse()).map_err(|e| dualfuzz::Error::Config(format!("{e}")))?;
    cfg.seed = 1;
    let out = args.next().unwrap_or_else(|| "target/example-campaign".into());

    let campaign = run_campaign(&cfg)?;
    campaign.write(out.as_ref())?;
    let r = &campaign.report;
    println!("{} tests after {} initial runs", r.test_runs, r.init_runs);
    println!("critical {} (coverage {}), modes {:?}", r.critical_count, r.diversity.coverage, r.mode_counts);
    println!("admissions {:?}", r.admission_counts);
    println!("artifacts in {out}");
    Ok(())
}
