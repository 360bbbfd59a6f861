//! Audit a few draws: dual block solver vs projected gradient, slot LP vs random
//! feasible points, and every scheme's optimizer vs the grid search.

use backcom_mec::harness::{verify_instances, ExperimentConfig};
use backcom_mec::optimizer::{Scheme, SolverConfig};
use backcom_mec::oracle::GridSpec;

fn main() {
    let cfg = ExperimentConfig::default();
    let grid = GridSpec::uniform(8, 1e-6, 1.0, 11, 11, 11);
    for scheme in Scheme::ALL {
        let rows = verify_instances(&cfg, &SolverConfig::default(), scheme, 3, Some(&grid));
        for r in rows {
            println!(
                "{:<16} trial {} {}: block gap {:.1e}, gradient error {:.1e}, optimizer {:.4e}, grid {} (bound {})",
                scheme.name(),
                r.trial,
                if r.passed { "ok" } else { "FAILED" },
                r.block_rel_gap,
                r.gradient_error,
                r.optimizer_ce,
                r.grid_ce.map_or("-".into(), |g| format!("{g:.4e}")),
                r.grid_bound.map_or("-".into(), |b| format!("{b:.2e}")),
            );
        }
    }
}
