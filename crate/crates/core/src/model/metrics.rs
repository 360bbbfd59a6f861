use serde::{Deserialize, Serialize};

use super::params::{other, ChannelRealization, Decision, SystemParams};
use crate::error::{Error, Result};

/// Energy user k harvests from the partner's transmission during the partner's slot.
pub fn harvested_energy(
    dec: &Decision,
    ch: &ChannelRealization,
    sys: &SystemParams,
    k: usize,
) -> f64 {
    let j = other(k);
    dec.slot_time[j]
        * sys.eh_coeff
        * (1.0 - dec.reflection_coeff[k])
        * dec.transmit_power[j]
        * ch.gain_interuser
}

/// SINR of user k's active signal, with the partner's backscatter as interference.
pub fn active_sinr(dec: &Decision, ch: &ChannelRealization, sys: &SystemParams, k: usize) -> f64 {
    let j = other(k);
    let p = dec.transmit_power[k];
    let interference =
        dec.reflection_coeff[j] * p * ch.gain_user_ap[j] * ch.gain_interuser;
    p * ch.gain_user_ap[k] / (interference + sys.noise_power)
}

/// SNR of user k's backscattered signal in the partner's slot, after cancellation.
pub fn backscatter_snr(
    dec: &Decision,
    ch: &ChannelRealization,
    sys: &SystemParams,
    k: usize,
) -> f64 {
    dec.backscatter_power(k) * ch.gain_user_ap[k] * ch.gain_interuser / sys.noise_power
}

/// Bit and energy accounting for one user.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UserMetrics {
    pub active_bits: f64,
    pub backscatter_bits: f64,
    pub local_bits: f64,
    pub total_bits: f64,
    pub local_energy: f64,
    pub total_energy: f64,
    pub harvested_energy: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub users: [UserMetrics; 2],
    /// Computation efficiency, bits per joule.
    pub ce: f64,
}

impl Metrics {
    pub fn total_bits(&self) -> f64 {
        self.users[0].total_bits + self.users[1].total_bits
    }

    pub fn total_energy(&self) -> f64 {
        self.users[0].total_energy + self.users[1].total_energy
    }
}

pub(crate) fn user_metrics(
    dec: &Decision,
    ch: &ChannelRealization,
    sys: &SystemParams,
    k: usize,
) -> UserMetrics {
    let j = other(k);
    let u = &sys.users[k];
    let t = sys.frame_time;
    let f = dec.cpu_freq[k];
    let local_bits = t * f / u.cpu_cycles_per_bit;
    let local_energy = t * u.capacitance_coeff * f * f * f;
    let active_bits =
        dec.slot_time[k] * sys.bandwidth * (1.0 + active_sinr(dec, ch, sys, k)).log2();
    let backscatter_bits =
        dec.slot_time[j] * sys.bandwidth * (1.0 + backscatter_snr(dec, ch, sys, k)).log2();
    let total_bits = local_bits + active_bits + backscatter_bits;
    let total_energy =
        dec.slot_time[k] * (dec.transmit_power[k] + u.circuit_power_active) + local_energy;
    UserMetrics {
        active_bits,
        backscatter_bits,
        local_bits,
        total_bits,
        local_energy,
        total_energy,
        harvested_energy: harvested_energy(dec, ch, sys, k),
    }
}

/// Evaluate bits, energy and the CE ratio of a decision.
pub fn compute_metrics(
    dec: &Decision,
    ch: &ChannelRealization,
    sys: &SystemParams,
) -> Result<Metrics> {
    let users = [user_metrics(dec, ch, sys, 0), user_metrics(dec, ch, sys, 1)];
    let bits = users[0].total_bits + users[1].total_bits;
    let energy = users[0].total_energy + users[1].total_energy;
    if energy <= 0.0 {
        // Any bit needs either slot time (circuit power) or CPU cycles, so bits are 0 too.
        return Err(Error::NoActivity);
    }
    Ok(Metrics {
        users,
        ce: bits / energy,
    })
}
