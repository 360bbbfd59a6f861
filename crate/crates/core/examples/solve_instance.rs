//! Solve one random channel draw under every scheme and compare.
//!
//! cargo run --example solve_instance -- [seed]

use backcom_mec::harness::{trial_seed, ExperimentConfig};
use backcom_mec::model::draw_channel;
use backcom_mec::optimizer::{solve_schemes, Scheme, SolverConfig};

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let cfg = ExperimentConfig::default();
    let ch = draw_channel(trial_seed(seed, 0), &cfg.channel);
    println!(
        "|h1|^2 = {:.3e}, |h2|^2 = {:.3e}, |g|^2 = {:.3e}",
        ch.gain_user_ap[0], ch.gain_user_ap[1], ch.gain_interuser
    );
    for r in solve_schemes(&cfg.sys, &ch, &Scheme::ALL, &SolverConfig::default()) {
        if !r.feasible {
            println!("{:<16} infeasible", r.scheme.name());
            continue;
        }
        let d = &r.decision;
        println!(
            "{:<16} CE {:.4e} bits/J  p {:.2e}/{:.2e} W  t {:.3}/{:.3} s  alpha {:.3}/{:.3}  f {:.2e}/{:.2e} Hz",
            r.scheme.name(),
            r.ce,
            d.transmit_power[0],
            d.transmit_power[1],
            d.slot_time[0],
            d.slot_time[1],
            d.reflection_coeff[0],
            d.reflection_coeff[1],
            d.cpu_freq[0],
            d.cpu_freq[1],
        );
    }
}
