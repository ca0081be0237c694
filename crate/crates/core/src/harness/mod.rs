//! Campaign driver: configuration, the main loop and its baselines,
//! persistence and comparison tables.

pub mod campaign;
pub mod compare;
pub mod config;
pub mod output;

pub use campaign::{run_campaign, run_dualspace, run_random, run_sensitivity_only, Campaign, CampaignReport, LogLine};
pub use compare::{compare_campaigns, compare_strategies, run_all, sweep_alpha, ComparisonRow, ComparisonTable, ALPHA_SWEEP};
pub use config::{load_pairs, parse_pairs, CampaignConfig, Strategy};
