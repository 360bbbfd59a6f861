//! Print the outer ratio iterations and the inner block trace of one solve.

use backcom_mec::harness::{trial_seed, ExperimentConfig};
use backcom_mec::model::draw_channel;
use backcom_mec::optimizer::{alternating_solve, Scheme, SolverConfig};

fn main() {
    let cfg = ExperimentConfig::default();
    let ch = draw_channel(trial_seed(7, 0), &cfg.channel);
    let report = alternating_solve(&cfg.sys, &ch, Scheme::Proposed, &SolverConfig::default());
    println!("feasible {}, converged {}, CE {:.6e} bits/J", report.feasible, report.converged, report.ce);
    for s in &report.dinkelbach {
        println!(
            "outer {:>2}: eta {:.9e}  F(eta) {:+.3e} bits",
            s.outer_iteration, s.eta, s.last_objective
        );
    }
    println!("inner steps (accepted only):");
    for step in report.trace.iter().filter(|s| s.accepted) {
        println!(
            "  outer {:>2} pass {:>3} {:<12} objective {:.9e}",
            step.outer,
            step.iteration,
            format!("{:?}", step.block),
            step.objective
        );
    }
    println!("final residual {:.2e}", report.dinkelbach_residual());
}
