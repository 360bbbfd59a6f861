use std::fmt;

use serde::{Deserialize, Serialize};

use super::metrics::{active_sinr, harvested_energy, user_metrics};
use super::params::{other, ChannelRealization, Decision, SystemParams, SLOT_EPS};

/// Constraints of the CE maximization problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintId {
    /// Reflection coefficient in range.
    ReflectionRange,
    /// Slot times fit in the frame.
    FrameTime,
    /// CPU frequency cap.
    CpuFrequency,
    /// Harvested energy covers the backscatter circuit.
    HarvestedEnergy,
    /// Active SINR meets the cancellation threshold.
    SinrThreshold,
    /// Minimum computed bits.
    MinBits,
    /// Energy budget.
    EnergyBudget,
}

impl ConstraintId {
    pub fn label(self) -> &'static str {
        match self {
            ConstraintId::ReflectionRange => "C1",
            ConstraintId::FrameTime => "C2",
            ConstraintId::CpuFrequency => "C3",
            ConstraintId::HarvestedEnergy => "C4",
            ConstraintId::SinrThreshold => "C5",
            ConstraintId::MinBits => "C6",
            ConstraintId::EnergyBudget => "C7",
        }
    }
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One evaluated constraint. `residual` is `lhs - rhs` of the `<=` form, in the
/// constraint's own units, so `residual <= 0` exactly when it holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintEntry {
    pub id: ConstraintId,
    pub user: Option<usize>,
    pub residual: f64,
    pub satisfied: bool,
    /// Set when the constraint holds by the unused-slot or inactive-backscatter convention.
    pub vacuous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub entries: Vec<ConstraintEntry>,
}

impl ConstraintReport {
    pub fn all_satisfied(&self) -> bool {
        self.entries.iter().all(|e| e.satisfied)
    }

    /// True when every residual is at most `tol` native units.
    pub fn all_within(&self, tol: f64) -> bool {
        self.entries.iter().all(|e| e.residual <= tol)
    }

    pub fn max_residual(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.residual)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn get(&self, id: ConstraintId, user: Option<usize>) -> Option<&ConstraintEntry> {
        self.entries.iter().find(|e| e.id == id && e.user == user)
    }

    pub fn violations(&self) -> impl Iterator<Item = &ConstraintEntry> {
        self.entries.iter().filter(|e| !e.satisfied)
    }
}

fn entry(id: ConstraintId, user: Option<usize>, residual: f64) -> ConstraintEntry {
    ConstraintEntry {
        id,
        user,
        residual,
        satisfied: residual <= 0.0,
        vacuous: false,
    }
}

fn vacuous(id: ConstraintId, user: Option<usize>) -> ConstraintEntry {
    ConstraintEntry {
        id,
        user,
        residual: 0.0,
        satisfied: true,
        vacuous: true,
    }
}

/// Evaluate C1 to C7 for a decision.
///
/// `alpha = 0` counts as inactive backscatter: C1 holds and C4 is vacuous. C4 and
/// C5 are also vacuous when the slot they depend on is shorter than [`SLOT_EPS`].
pub fn check_constraints(
    dec: &Decision,
    ch: &ChannelRealization,
    sys: &SystemParams,
) -> ConstraintReport {
    let mut entries = Vec::with_capacity(13);
    for k in 0..2 {
        let a = dec.reflection_coeff[k];
        entries.push(entry(
            ConstraintId::ReflectionRange,
            Some(k),
            (a - 1.0).max(-a),
        ));
    }
    entries.push(entry(
        ConstraintId::FrameTime,
        None,
        dec.slot_time[0] + dec.slot_time[1] - sys.frame_time,
    ));
    for k in 0..2 {
        let f = dec.cpu_freq[k];
        entries.push(entry(
            ConstraintId::CpuFrequency,
            Some(k),
            (f - sys.users[k].f_max).max(-f),
        ));
    }
    for k in 0..2 {
        let j = other(k);
        let t_j = dec.slot_time[j];
        if t_j < SLOT_EPS || dec.reflection_coeff[k] == 0.0 {
            entries.push(vacuous(ConstraintId::HarvestedEnergy, Some(k)));
        } else {
            let need = t_j * sys.users[k].circuit_power_backscatter;
            entries.push(entry(
                ConstraintId::HarvestedEnergy,
                Some(k),
                need - harvested_energy(dec, ch, sys, k),
            ));
        }
    }
    for k in 0..2 {
        if dec.slot_time[k] < SLOT_EPS {
            entries.push(vacuous(ConstraintId::SinrThreshold, Some(k)));
        } else {
            entries.push(entry(
                ConstraintId::SinrThreshold,
                Some(k),
                sys.users[k].sinr_threshold - active_sinr(dec, ch, sys, k),
            ));
        }
    }
    let users = [user_metrics(dec, ch, sys, 0), user_metrics(dec, ch, sys, 1)];
    for (k, m) in users.iter().enumerate() {
        entries.push(entry(
            ConstraintId::MinBits,
            Some(k),
            sys.users[k].min_bits - m.total_bits,
        ));
    }
    for (k, m) in users.iter().enumerate() {
        entries.push(entry(
            ConstraintId::EnergyBudget,
            Some(k),
            m.total_energy - sys.users[k].energy_budget,
        ));
    }
    ConstraintReport { entries }
}
