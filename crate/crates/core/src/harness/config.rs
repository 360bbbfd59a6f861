//! JSON experiment configuration. Every field is optional and defaults to the
//! reference operating point; minimum bits and sweep values on the bits axis are
//! given in Mbit, everything else in SI units.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChannelGenConfig, SystemParams, UserParams};
use crate::optimizer::Scheme;

const BITS_PER_MBIT: f64 = 1e6;

/// Parameter swept by an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepAxis {
    /// Per-user energy budget (J).
    #[serde(rename = "energy", alias = "energy-budget")]
    EnergyBudget,
    /// Per-user minimum computed bits (bits in memory, Mbit in the config file).
    #[serde(rename = "bits", alias = "min-bits")]
    MinBits,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::EnergyBudget => "energy",
            SweepAxis::MinBits => "bits",
        }
    }

    /// Default sweep values, SI.
    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepAxis::EnergyBudget => std::iter::once(0.05)
                .chain((1..=10).map(|i| i as f64 / 10.0))
                .collect(),
            SweepAxis::MinBits => (1..=6).map(|i| i as f64 / 10.0 * BITS_PER_MBIT).collect(),
        }
    }

    /// Set this axis' parameter to `value` (SI) for both users.
    pub fn apply(self, sys: &SystemParams, value: f64) -> SystemParams {
        sys.with_users(|u| match self {
            SweepAxis::EnergyBudget => u.energy_budget = value,
            SweepAxis::MinBits => u.min_bits = value,
        })
    }

    /// Whether raising this parameter enlarges the feasible set.
    pub fn relaxing_ascending(self) -> bool {
        match self {
            SweepAxis::EnergyBudget => true,
            SweepAxis::MinBits => false,
        }
    }

    fn to_si(self, value: f64) -> f64 {
        match self {
            SweepAxis::EnergyBudget => value,
            SweepAxis::MinBits => value * BITS_PER_MBIT,
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "energy" | "energy-budget" => Ok(SweepAxis::EnergyBudget),
            "bits" | "min-bits" => Ok(SweepAxis::MinBits),
            _ => Err(Error::config("axis", format!("expected energy or bits, got `{s}`"))),
        }
    }
}

/// Validated experiment description, SI units throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub sys: SystemParams,
    pub channel: ChannelGenConfig,
    pub axis: SweepAxis,
    /// Axis values (SI), positive and ascending.
    pub values: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub trials: usize,
    pub master_seed: u64,
    pub output: PathBuf,
    /// Fill the `wall_ms` column; off by default so output files are reproducible.
    pub record_timing: bool,
    /// Common transmit power (W) of the constant-power gap analysis.
    pub gap_power: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        parse_config("{}").expect("empty config is valid")
    }
}

impl ExperimentConfig {
    /// System parameters at one axis value.
    pub fn system_at(&self, value: f64) -> SystemParams {
        self.axis.apply(&self.sys, value)
    }

    /// Switch the axis; values reset to the axis defaults.
    pub fn with_axis(mut self, axis: SweepAxis) -> Self {
        if axis != self.axis {
            self.axis = axis;
            self.values = axis.default_values();
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.sys.validate()?;
        self.channel.validate()?;
        if self.trials == 0 {
            return Err(Error::config("sweep.trials", "must be at least 1"));
        }
        if self.values.is_empty() {
            return Err(Error::config("sweep.values", "must not be empty"));
        }
        if !self.values.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(Error::config("sweep.values", "must be finite and positive"));
        }
        if !self.values.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::config("sweep.values", "must be strictly ascending"));
        }
        if self.schemes.is_empty() {
            return Err(Error::config("sweep.schemes", "must not be empty"));
        }
        if !(self.gap_power.is_finite() && self.gap_power > 0.0) {
            return Err(Error::config("gap.p0_w", "must be finite and positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawConfig {
    system: RawSystem,
    channel: RawChannel,
    sweep: RawSweep,
    gap: RawGap,
    output: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawSystem {
    frame_time_s: f64,
    bandwidth_hz: f64,
    noise_power_w: f64,
    eh_coeff: f64,
    cpu_cycles_per_bit: f64,
    capacitance_coeff: f64,
    f_max_hz: f64,
    circuit_power_backscatter_w: f64,
    circuit_power_active_w: f64,
    sinr_threshold: f64,
    min_bits_mbit: f64,
    energy_budget_j: f64,
}

impl Default for RawSystem {
    fn default() -> Self {
        let sys = SystemParams::default();
        let u = UserParams::default();
        Self {
            frame_time_s: sys.frame_time,
            bandwidth_hz: sys.bandwidth,
            noise_power_w: sys.noise_power,
            eh_coeff: sys.eh_coeff,
            cpu_cycles_per_bit: u.cpu_cycles_per_bit,
            capacitance_coeff: u.capacitance_coeff,
            f_max_hz: u.f_max,
            circuit_power_backscatter_w: u.circuit_power_backscatter,
            circuit_power_active_w: u.circuit_power_active,
            sinr_threshold: u.sinr_threshold,
            min_bits_mbit: u.min_bits / BITS_PER_MBIT,
            energy_budget_j: u.energy_budget,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawChannel {
    pathloss_exponent: f64,
    rician_k_db: f64,
    ap_distance_m: (f64, f64),
    interuser_distance_m: (f64, f64),
}

impl Default for RawChannel {
    fn default() -> Self {
        let c = ChannelGenConfig::default();
        Self {
            pathloss_exponent: c.pathloss_exponent,
            rician_k_db: c.rician_k_db,
            ap_distance_m: c.ap_user_distance,
            interuser_distance_m: c.interuser_distance,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawSweep {
    axis: SweepAxis,
    /// J for the energy axis, Mbit for the bits axis.
    values: Option<Vec<f64>>,
    schemes: Vec<Scheme>,
    trials: usize,
    master_seed: u64,
    record_timing: bool,
}

impl Default for RawSweep {
    fn default() -> Self {
        Self {
            axis: SweepAxis::EnergyBudget,
            values: None,
            schemes: Scheme::ALL.to_vec(),
            trials: 200,
            master_seed: 0,
            record_timing: false,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawGap {
    p0_w: f64,
}

impl Default for RawGap {
    fn default() -> Self {
        Self { p0_w: 0.1 }
    }
}

/// Parse and validate a JSON experiment configuration. Errors carry the path of
/// the offending field.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(path, e.into_inner().to_string())
    })?;
    let s = &raw.system;
    // Check under the file's own field names before converting.
    for (name, value) in [
        ("frame_time_s", s.frame_time_s),
        ("bandwidth_hz", s.bandwidth_hz),
        ("noise_power_w", s.noise_power_w),
        ("eh_coeff", s.eh_coeff),
        ("cpu_cycles_per_bit", s.cpu_cycles_per_bit),
        ("capacitance_coeff", s.capacitance_coeff),
        ("f_max_hz", s.f_max_hz),
        ("circuit_power_backscatter_w", s.circuit_power_backscatter_w),
        ("circuit_power_active_w", s.circuit_power_active_w),
        ("sinr_threshold", s.sinr_threshold),
        ("energy_budget_j", s.energy_budget_j),
    ] {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::config(
                format!("system.{name}"),
                format!("must be finite and positive, got {value}"),
            ));
        }
    }
    if !(s.min_bits_mbit.is_finite() && s.min_bits_mbit >= 0.0) {
        return Err(Error::config(
            "system.min_bits_mbit",
            format!("must be finite and non-negative, got {}", s.min_bits_mbit),
        ));
    }
    let user = UserParams {
        cpu_cycles_per_bit: s.cpu_cycles_per_bit,
        capacitance_coeff: s.capacitance_coeff,
        f_max: s.f_max_hz,
        circuit_power_backscatter: s.circuit_power_backscatter_w,
        circuit_power_active: s.circuit_power_active_w,
        sinr_threshold: s.sinr_threshold,
        min_bits: s.min_bits_mbit * BITS_PER_MBIT,
        energy_budget: s.energy_budget_j,
    };
    let sys = SystemParams {
        frame_time: s.frame_time_s,
        bandwidth: s.bandwidth_hz,
        noise_power: s.noise_power_w,
        eh_coeff: s.eh_coeff,
        users: [user; 2],
    };
    let c = &raw.channel;
    let channel = ChannelGenConfig {
        pathloss_exponent: c.pathloss_exponent,
        rician_k_db: c.rician_k_db,
        ap_user_distance: c.ap_distance_m,
        interuser_distance: c.interuser_distance_m,
    };
    let axis = raw.sweep.axis;
    let values = match &raw.sweep.values {
        Some(v) => v.iter().map(|&x| axis.to_si(x)).collect(),
        None => axis.default_values(),
    };
    let cfg = ExperimentConfig {
        sys,
        channel,
        axis,
        values,
        schemes: raw.sweep.schemes,
        trials: raw.sweep.trials,
        master_seed: raw.sweep.master_seed,
        output: raw.output.unwrap_or_else(|| PathBuf::from("results")),
        record_timing: raw.sweep.record_timing,
        gap_power: raw.gap.p0_w,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Read and parse a configuration file.
pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_reference_defaults() {
        let cfg = parse_config("{}").unwrap();
        assert_eq!(cfg.sys, SystemParams::default());
        let u = cfg.sys.users[0];
        assert_eq!(cfg.sys.frame_time, 1.0);
        assert_eq!(cfg.sys.bandwidth, 1e5);
        assert_eq!(cfg.sys.noise_power, 1e-11);
        assert_eq!(cfg.sys.eh_coeff, 0.8);
        assert_eq!(u.sinr_threshold, 100.0);
        assert_eq!(u.min_bits, 2e5);
        assert_eq!(u.energy_budget, 1.0);
        assert_eq!(u.circuit_power_backscatter, 1e-4);
        assert_eq!(u.circuit_power_active, 1e-2);
        assert_eq!(u.capacitance_coeff, 1e-26);
        assert_eq!(u.cpu_cycles_per_bit, 1000.0);
        assert_eq!(u.f_max, 1e9);
        assert_eq!(cfg.channel, ChannelGenConfig::default());
        assert_eq!(cfg.trials, 200);
        assert_eq!(cfg.schemes, Scheme::ALL.to_vec());
        assert_eq!(cfg.values.len(), 11);
    }

    #[test]
    fn min_bits_are_converted_from_mbit() {
        let cfg = parse_config(r#"{"system": {"min_bits_mbit": 0.4}}"#).unwrap();
        assert_eq!(cfg.sys.users[1].min_bits, 4e5);
        let cfg = parse_config(r#"{"sweep": {"axis": "bits", "values": [0.1, 0.25]}}"#).unwrap();
        assert_eq!(cfg.values, vec![1e5, 2.5e5]);
    }

    #[test]
    fn negative_bandwidth_names_the_field() {
        let err = parse_config(r#"{"system": {"bandwidth_hz": -1}}"#).unwrap_err();
        match err {
            Error::Config { path, .. } => assert_eq!(path, "system.bandwidth_hz"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_path() {
        let err = parse_config(r#"{"channel": {"pathloss": 2}}"#).unwrap_err();
        let Error::Config { path, message } = err else {
            panic!()
        };
        assert_eq!(path, "channel.pathloss");
        assert!(message.contains("pathloss"), "{message}");
        let err = parse_config(r#"{"sweep": {"trials": "many"}}"#).unwrap_err();
        let Error::Config { path, .. } = err else {
            panic!()
        };
        assert_eq!(path, "sweep.trials");
        assert_eq!(path, "sweep.trials");
    }

    #[test]
    fn sweep_values_must_ascend() {
        assert!(parse_config(r#"{"sweep": {"values": [0.5, 0.2]}}"#).is_err());
        assert!(parse_config(r#"{"sweep": {"trials": 0}}"#).is_err());
        assert!(parse_config(r#"{"sweep": {"schemes": ["magic"]}}"#).is_err());
    }

    #[test]
    fn axis_names_parse() {
        assert_eq!("energy".parse::<SweepAxis>().unwrap(), SweepAxis::EnergyBudget);
        assert_eq!("bits".parse::<SweepAxis>().unwrap(), SweepAxis::MinBits);
        assert!("time".parse::<SweepAxis>().is_err());
        let cfg = parse_config(r#"{"sweep": {"axis": "bits"}}"#).unwrap();
        assert_eq!(cfg.axis, SweepAxis::MinBits);
        assert_eq!(cfg.values.len(), 6);
    }
}
