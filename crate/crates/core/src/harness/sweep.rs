use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SweepAxis};
use crate::model::{draw_channel, ChannelRealization, SystemParams};
use crate::optimizer::{solve_schemes_from, Scheme, SolveReport, SolverConfig};

/// One (scheme, axis value, trial) outcome. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub scheme: Scheme,
    pub axis: SweepAxis,
    /// Axis value, SI (J or bits).
    pub value: f64,
    pub trial: usize,
    pub seed: u64,
    pub feasible: bool,
    /// CE of the returned decision; 0 when infeasible.
    pub eta_bits_per_joule: f64,
    pub bits_u1: f64,
    pub bits_u2: f64,
    #[serde(rename = "energy_u1_J")]
    pub energy_u1: f64,
    #[serde(rename = "energy_u2_J")]
    pub energy_u2: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    /// Solve time; 0 unless timing is recorded.
    pub wall_ms: f64,
}

/// Mean and spread of CE for one (scheme, axis value), feasible trials only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scheme: Scheme,
    pub axis: SweepAxis,
    pub value: f64,
    pub trials: usize,
    pub feasible: usize,
    pub infeasible: usize,
    /// Empty when no trial is feasible.
    pub mean_eta_bits_per_joule: Option<f64>,
    /// Sample standard deviation; 0 for a single feasible trial.
    pub stddev_eta_bits_per_joule: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
    pub summary: Vec<SummaryRow>,
}

impl SweepResult {
    pub fn row(&self, scheme: Scheme, value: f64) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|r| r.scheme == scheme && r.value == value)
    }

    /// Mean CE per axis value for one scheme, `None` where nothing is feasible.
    pub fn curve(&self, scheme: Scheme) -> Vec<(f64, Option<f64>)> {
        self.summary
            .iter()
            .filter(|r| r.scheme == scheme)
            .map(|r| (r.value, r.mean_eta_bits_per_joule))
            .collect()
    }

    pub fn all_infeasible(&self) -> bool {
        self.records.iter().all(|r| !r.feasible)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Channel seed of a trial. Depends only on the master seed and the trial index,
/// so adding trials or axis values leaves earlier draws unchanged.
pub fn trial_seed(master_seed: u64, trial: usize) -> u64 {
    splitmix64(splitmix64(master_seed) ^ trial as u64)
}

fn record(
    cfg: &ExperimentConfig,
    value: f64,
    trial: usize,
    seed: u64,
    report: &SolveReport,
    wall_ms: f64,
) -> SweepRecord {
    let (bits, energy) = match (&report.metrics, report.feasible) {
        (Some(m), true) => (
            [m.users[0].total_bits, m.users[1].total_bits],
            [m.users[0].total_energy, m.users[1].total_energy],
        ),
        _ => ([0.0; 2], [0.0; 2]),
    };
    SweepRecord {
        scheme: report.scheme,
        axis: cfg.axis,
        value,
        trial,
        seed,
        feasible: report.feasible,
        eta_bits_per_joule: if report.feasible { report.ce } else { 0.0 },
        bits_u1: bits[0],
        bits_u2: bits[1],
        energy_u1: energy[0],
        energy_u2: energy[1],
        outer_iters: report.outer_iterations,
        inner_iters: report.total_inner_iterations(),
        wall_ms,
    }
}

/// Solve every (axis value, trial) cell for all configured schemes on the same
/// channel and summarize. Trials run in parallel; the output does not depend on
/// the worker count.
pub fn run_sweep(cfg: &ExperimentConfig, solver: &SolverConfig) -> SweepResult {
    run_sweep_with(cfg, solver, |_, _, _| {})
}

/// [`run_sweep`] that also hands every report, with the system and channel it was
/// solved for, to `inspect`. Calls arrive from worker threads in no fixed order.
pub fn run_sweep_with<F>(cfg: &ExperimentConfig, solver: &SolverConfig, inspect: F) -> SweepResult
where
    F: Fn(&SolveReport, &SystemParams, &ChannelRealization) + Sync,
{
    // Each trial walks the axis in the direction that enlarges the feasible set
    // and warm-starts every point from the previous one, so a trial's CE is
    // monotone along the axis up to the solver tolerance.
    let order: Vec<usize> = match cfg.axis.relaxing_ascending() {
        true => (0..cfg.values.len()).collect(),
        false => (0..cfg.values.len()).rev().collect(),
    };
    let mut records: Vec<SweepRecord> = (0..cfg.trials)
        .into_par_iter()
        .flat_map_iter(|trial| {
            let seed = trial_seed(cfg.master_seed, trial);
            let ch = draw_channel(seed, &cfg.channel);
            let mut previous: Vec<SolveReport> = Vec::new();
            let mut out = Vec::with_capacity(cfg.values.len() * cfg.schemes.len());
            for &v in &order {
                let value = cfg.values[v];
                let sys = cfg.system_at(value);
                let start = Instant::now();
                let reports = solve_schemes_from(&sys, &ch, &cfg.schemes, solver, &previous);
                // Schemes share the benchmark solves, so the cell time is split evenly.
                let wall_ms = if cfg.record_timing {
                    start.elapsed().as_secs_f64() * 1e3 / reports.len() as f64
                } else {
                    0.0
                };
                for r in &reports {
                    inspect(r, &sys, &ch);
                    out.push(record(cfg, value, trial, seed, r, wall_ms));
                }
                previous = reports;
            }
            out
        })
        .collect();
    let scheme_index = |s: Scheme| cfg.schemes.iter().position(|&x| x == s).unwrap_or(usize::MAX);
    records.sort_by(|a, b| {
        scheme_index(a.scheme)
            .cmp(&scheme_index(b.scheme))
            .then(a.value.total_cmp(&b.value))
            .then(a.trial.cmp(&b.trial))
    });
    let summary = summarize(cfg, &records);
    SweepResult { records, summary }
}

/// Per (scheme, value) statistics over feasible trials, in configuration order.
pub fn summarize(cfg: &ExperimentConfig, records: &[SweepRecord]) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for &scheme in &cfg.schemes {
        for &value in &cfg.values {
            let cell: Vec<&SweepRecord> = records
                .iter()
                .filter(|r| r.scheme == scheme && r.value == value)
                .collect();
            let etas: Vec<f64> = cell
                .iter()
                .filter(|r| r.feasible)
                .map(|r| r.eta_bits_per_joule)
                .collect();
            let n = etas.len();
            let mean = (n > 0).then(|| etas.iter().sum::<f64>() / n as f64);
            let stddev = mean.map(|m| {
                if n < 2 {
                    0.0
                } else {
                    (etas.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
                }
            });
            out.push(SummaryRow {
                scheme,
                axis: cfg.axis,
                value,
                trials: cell.len(),
                feasible: n,
                infeasible: cell.len() - n,
                mean_eta_bits_per_joule: mean,
                stddev_eta_bits_per_joule: stddev,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::parse_config;

    #[test]
    fn trial_seeds_are_stable_and_distinct() {
        assert_eq!(trial_seed(7, 3), trial_seed(7, 3));
        assert_ne!(trial_seed(7, 3), trial_seed(7, 4));
        assert_ne!(trial_seed(7, 3), trial_seed(8, 3));
    }

    #[test]
    fn small_sweep_pairs_schemes_on_one_channel() {
        let cfg = parse_config(
            r#"{"sweep": {"values": [0.5, 1.0], "trials": 2, "master_seed": 3}}"#,
        )
        .unwrap();
        let res = run_sweep(&cfg, &SolverConfig::default());
        assert_eq!(res.records.len(), 4 * 2 * 2);
        for r in &res.records {
            let same: Vec<_> = res
                .records
                .iter()
                .filter(|o| o.trial == r.trial && o.value == r.value)
                .collect();
            assert!(same.iter().all(|o| o.seed == r.seed));
        }
        for row in &res.summary {
            assert_eq!(row.trials, 2);
            assert_eq!(row.feasible + row.infeasible, 2);
        }
    }

    #[test]
    fn summary_mean_is_the_feasible_mean() {
        let cfg = parse_config(r#"{"sweep": {"values": [1.0], "schemes": ["proposed"], "trials": 1}}"#)
            .unwrap();
        let mk = |trial, feasible, eta| SweepRecord {
            scheme: Scheme::Proposed,
            axis: SweepAxis::EnergyBudget,
            value: 1.0,
            trial,
            seed: 0,
            feasible,
            eta_bits_per_joule: eta,
            bits_u1: 0.0,
            bits_u2: 0.0,
            energy_u1: 0.0,
            energy_u2: 0.0,
            outer_iters: 0,
            inner_iters: 0,
            wall_ms: 0.0,
        };
        let recs = vec![mk(0, true, 1.0), mk(1, true, 2.0), mk(2, false, 0.0), mk(3, true, 6.0)];
        let s = summarize(&cfg, &recs);
        assert_eq!(s[0].mean_eta_bits_per_joule, Some(3.0));
        assert_eq!(s[0].infeasible, 1);
        assert!((s[0].stddev_eta_bits_per_joule.unwrap() - 7f64.sqrt()).abs() < 1e-12);
    }
}
