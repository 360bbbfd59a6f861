//! Mean CE of every scheme against the energy budget, written to `results/energy`.
//!
//! cargo run --release --example energy_budget_sweep -- [trials]

use backcom_mec::harness::{emit_results, run_sweep, ExperimentConfig, SweepAxis};
use backcom_mec::optimizer::SolverConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig::default().with_axis(SweepAxis::EnergyBudget);
    cfg.trials = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let result = run_sweep(&cfg, &SolverConfig::default());
    for row in &result.summary {
        println!(
            "{:<16} E_bud {:>5.2} J  mean CE {:>12.4e}  infeasible {}",
            row.scheme.name(),
            row.value,
            row.mean_eta_bits_per_joule.unwrap_or(f64::NAN),
            row.infeasible
        );
    }
    for path in emit_results(&result, &cfg.output.join("energy"))? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
