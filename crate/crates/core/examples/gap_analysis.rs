//! Reciprocal vs non-reciprocal bits at constant power: the two worked examples
//! and a batch of random draws.

use backcom_mec::gap::{bits_gap, GapCase, GapScenario};
use backcom_mec::harness::{gap_draws, ExperimentConfig};
use backcom_mec::model::{ChannelRealization, SystemParams};

fn main() {
    for (label, h_partner) in [("weak partner", 1e-4), ("strong partner", 1e-2)] {
        let scn = GapScenario {
            p0: 0.1,
            sys: SystemParams::default(),
            ch: ChannelRealization::new([1e-4, h_partner], 1e-2).unwrap(),
            user: 0,
        };
        let r = bits_gap(&scn);
        println!(
            "{label}: case {:?}, alpha {:.4}, reciprocal {:.1} bits, non-reciprocal {:.1} bits, gap {:.1} bits",
            r.case, r.alpha, r.reciprocal_bits, r.nonreciprocal_bits, r.gap
        );
    }

    let rows = gap_draws(&ExperimentConfig::default(), 10_000);
    for case in [GapCase::A, GapCase::B, GapCase::Inactive] {
        let gaps: Vec<f64> = rows
            .iter()
            .filter(|r| r.result.case == case)
            .map(|r| r.result.gap)
            .collect();
        if gaps.is_empty() {
            continue;
        }
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        let min = gaps.iter().copied().fold(f64::INFINITY, f64::min);
        println!("{case:?}: {} draws, mean gap {mean:.1} bits, min {min:.1} bits", gaps.len());
    }
}
