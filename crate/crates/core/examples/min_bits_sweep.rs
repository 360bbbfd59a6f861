//! Mean CE of every scheme against the minimum computed bits, written to
//! `results/bits`. Full local computing becomes infeasible above about 0.464 Mbit.
//!
//! cargo run --release --example min_bits_sweep -- [trials]

use backcom_mec::harness::{emit_results, run_sweep, ExperimentConfig, SweepAxis};
use backcom_mec::optimizer::SolverConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig::default().with_axis(SweepAxis::MinBits);
    cfg.trials = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let result = run_sweep(&cfg, &SolverConfig::default());
    for row in &result.summary {
        let mean = row
            .mean_eta_bits_per_joule
            .map_or("infeasible".to_string(), |m| format!("{m:.4e}"));
        println!(
            "{:<16} R_th {:.1} Mbit  mean CE {:>12}  infeasible {}/{}",
            row.scheme.name(),
            row.value / 1e6,
            mean,
            row.infeasible,
            row.trials
        );
    }
    for path in emit_results(&result, &cfg.output.join("bits"))? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
