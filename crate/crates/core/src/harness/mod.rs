//! Experiment configuration, Monte Carlo sweeps, CSV output and audit runs.

pub mod audit;
pub mod config;
pub mod output;
pub mod sweep;

pub use audit::{gap_draws, verify_instances, GapRecord, GapRow, VerifyRow};
pub use config::{load_config, parse_config, ExperimentConfig, SweepAxis};
pub use output::{emit_results, read_records, read_summary};
pub use sweep::{run_sweep, run_sweep_with, summarize, trial_seed, SummaryRow, SweepRecord, SweepResult};
