use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dualfuzz::envs::{oracle, CorridorNav, Intercept2d};
use dualfuzz::harness::{self, output::to_json, CampaignConfig};
use dualfuzz::Result;

#[derive(Parser)]
#[command(name = "dualfuzz", version, about = "Scenario fuzzing campaigns over the built-in environments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one campaign.
    Run(CampaignArgs),
    /// Run all three strategies on the same configuration.
    Compare(CampaignArgs),
    /// Run the dual-space strategy for alpha in {0, 0.2, ..., 1}.
    SweepAlpha(CampaignArgs),
    /// Regenerate the environment oracles and fixtures.
    Oracle {
        #[arg(long, default_value = "oracle")]
        out: PathBuf,
        /// Cells per axis of the intercept slice.
        #[arg(long, default_value_t = 200)]
        slice: usize,
        /// Monte Carlo samples per environment.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct CampaignArgs {
    /// `key = value` configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    env: Option<String>,
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tests: Option<usize>,
    #[arg(long)]
    db_size: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    window: Option<usize>,
    /// One cell count for every axis, or a comma-separated list.
    #[arg(long)]
    partitions: Option<String>,
    /// Extra `key=value` assignments.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl CampaignArgs {
    fn config(&self) -> Result<CampaignConfig> {
        let mut pairs = match &self.config {
            Some(p) => harness::load_pairs(p)?,
            None => Vec::new(),
        };
        let flags = [
            ("env", self.env.clone()),
            ("strategy", self.strategy.clone()),
            ("seed", self.seed.map(|v| v.to_string())),
            ("n_tests", self.tests.map(|v| v.to_string())),
            ("n_scenarios", self.db_size.map(|v| v.to_string())),
            ("alpha", self.alpha.map(|v| v.to_string())),
            ("theta", self.theta.map(|v| v.to_string())),
            ("window", self.window.map(|v| v.to_string())),
            ("partitions", self.partitions.clone()),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                pairs.push((k.to_string(), v));
            }
        }
        for s in &self.set {
            pairs.extend(harness::parse_pairs(s)?);
        }
        CampaignConfig::from_pairs(&pairs)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let campaign = harness::run_campaign(&args.config()?)?;
            campaign.write(&args.out)?;
            let r = &campaign.report;
            println!(
                "{} {}: {} critical in {} tests, coverage {}, wrote {}",
                r.config.env,
                r.config.strategy.as_str(),
                r.critical_count,
                r.test_runs,
                r.diversity.coverage,
                args.out.display()
            );
        }
        Command::Compare(args) => {
            let (campaigns, table) = harness::compare_strategies(&args.config()?)?;
            write_table(&args.out, &campaigns, &table)?;
        }
        Command::SweepAlpha(args) => {
            let (campaigns, table) = harness::sweep_alpha(&args.config()?)?;
            write_table(&args.out, &campaigns, &table)?;
        }
        Command::Oracle {
            out,
            slice,
            samples,
            seed,
        } => {
            fs::create_dir_all(&out)?;
            let map = oracle::intercept_slice(&Intercept2d::new(), slice)?;
            fs::write(out.join("intercept2d_slice.txt"), oracle::slice_to_text(&map))?;
            fs::write(out.join("corridor_trap.txt"), oracle::corridor_fixture_text(&oracle::corridor_trap()))?;
            fs::write(out.join("env_constants.toml"), dualfuzz::envs::constants_file())?;
            print!("{}", oracle::summary(slice, samples, seed)?);
            let trap = oracle::corridor_trap_times_out(&CorridorNav::new(), &oracle::corridor_trap())?;
            if !trap {
                eprintln!("warning: corridor trap fixture no longer times out");
            }
        }
    }
    Ok(())
}

fn write_table(out: &std::path::Path, campaigns: &[harness::Campaign], table: &harness::ComparisonTable) -> Result<()> {
    fs::create_dir_all(out)?;
    for (c, row) in campaigns.iter().zip(&table.rows) {
        c.write(&out.join(&row.label))?;
    }
    fs::write(out.join("metrics.csv"), table.to_csv())?;
    fs::write(out.join("comparison.json"), to_json(table)?)?;
    print!("{}", table.to_csv());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
