//! Summary statistics of the random channel model.

use backcom_mec::harness::{trial_seed, ExperimentConfig};
use backcom_mec::model::draw_channel;

fn main() {
    let cfg = ExperimentConfig::default();
    let n = 10_000;
    let mut logs = [Vec::new(), Vec::new(), Vec::new()];
    for trial in 0..n {
        let ch = draw_channel(trial_seed(cfg.master_seed, trial), &cfg.channel);
        logs[0].push(10.0 * ch.gain_user_ap[0].log10());
        logs[1].push(10.0 * ch.gain_user_ap[1].log10());
        logs[2].push(10.0 * ch.gain_interuser.log10());
    }
    for (name, mut v) in ["|h1|^2", "|h2|^2", "|g|^2"].into_iter().zip(logs) {
        v.sort_by(f64::total_cmp);
        let mean = v.iter().sum::<f64>() / n as f64;
        println!(
            "{name:<7} dB: mean {mean:>7.2}  p5 {:>7.2}  median {:>7.2}  p95 {:>7.2}",
            v[n / 20],
            v[n / 2],
            v[n - n / 20]
        );
    }
}
