use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slots shorter than this are treated as unused.
pub const SLOT_EPS: f64 = 1e-9;

/// Index of the partner user in the two-user pair.
#[inline]
pub const fn other(k: usize) -> usize {
    1 - k
}

/// Per-user computing and energy parameters, all in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserParams {
    /// CPU cycles needed per computed bit.
    pub cpu_cycles_per_bit: f64,
    /// Effective switched capacitance; local energy is `T * coeff * f^3`.
    pub capacitance_coeff: f64,
    /// Maximum CPU frequency (Hz).
    pub f_max: f64,
    /// Circuit power drawn while backscattering (W).
    pub circuit_power_backscatter: f64,
    /// Circuit power drawn while actively transmitting (W).
    pub circuit_power_active: f64,
    /// SINR needed to decode the active signal before cancelling it.
    pub sinr_threshold: f64,
    /// Minimum number of bits computed per frame.
    pub min_bits: f64,
    /// Energy available per frame (J).
    pub energy_budget: f64,
}

impl UserParams {
    pub fn validate(&self, user: usize) -> Result<()> {
        let fields = [
            ("cpu_cycles_per_bit", self.cpu_cycles_per_bit),
            ("capacitance_coeff", self.capacitance_coeff),
            ("f_max", self.f_max),
            ("circuit_power_backscatter", self.circuit_power_backscatter),
            ("circuit_power_active", self.circuit_power_active),
            ("sinr_threshold", self.sinr_threshold),
            ("energy_budget", self.energy_budget),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::config(
                    format!("users[{user}].{name}"),
                    format!("must be finite and positive, got {value}"),
                ));
            }
        }
        // A zero requirement is allowed; it is the "no QoS" edge case.
        if !(self.min_bits.is_finite() && self.min_bits >= 0.0) {
            return Err(Error::config(
                format!("users[{user}].min_bits"),
                format!("must be finite and non-negative, got {}", self.min_bits),
            ));
        }
        if self.sinr_threshold < 1.0 {
            return Err(Error::config(
                format!("users[{user}].sinr_threshold"),
                format!("must be at least 1, got {}", self.sinr_threshold),
            ));
        }
        Ok(())
    }
}

impl Default for UserParams {
    fn default() -> Self {
        Self {
            cpu_cycles_per_bit: 1000.0,
            capacitance_coeff: 1e-26,
            f_max: 1e9,
            circuit_power_backscatter: 1e-4,
            circuit_power_active: 1e-2,
            sinr_threshold: 100.0,
            min_bits: 2e5,
            energy_budget: 1.0,
        }
    }
}

/// Static scenario parameters for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Frame duration T (s).
    pub frame_time: f64,
    /// Bandwidth B (Hz).
    pub bandwidth: f64,
    /// Receiver noise power (W).
    pub noise_power: f64,
    /// Energy-harvesting efficiency in (0, 1].
    pub eh_coeff: f64,
    pub users: [UserParams; 2],
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("frame_time", self.frame_time),
            ("bandwidth", self.bandwidth),
            ("noise_power", self.noise_power),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::config(
                    name,
                    format!("must be finite and positive, got {value}"),
                ));
            }
        }
        if !(self.eh_coeff > 0.0 && self.eh_coeff <= 1.0) {
            return Err(Error::config(
                "eh_coeff",
                format!("must lie in (0, 1], got {}", self.eh_coeff),
            ));
        }
        for (k, u) in self.users.iter().enumerate() {
            u.validate(k)?;
        }
        Ok(())
    }

    /// Apply the same per-user edit to both users.
    pub fn with_users(mut self, edit: impl Fn(&mut UserParams)) -> Self {
        self.users.iter_mut().for_each(edit);
        self
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            frame_time: 1.0,
            bandwidth: 1e5,
            noise_power: 1e-11,
            eh_coeff: 0.8,
            users: [UserParams::default(); 2],
        }
    }
}

/// Large-scale and small-scale fading model used to draw channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelGenConfig {
    pub pathloss_exponent: f64,
    /// Rician K factor in dB; `f64::INFINITY` gives a pure line-of-sight channel.
    pub rician_k_db: f64,
    /// AP-to-user distance range (m), sampled uniformly.
    pub ap_user_distance: (f64, f64),
    /// User-to-user distance range (m), sampled uniformly.
    pub interuser_distance: (f64, f64),
}

impl ChannelGenConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pathloss_exponent.is_finite() && self.pathloss_exponent > 0.0) {
            return Err(Error::config(
                "channel.pathloss_exponent",
                format!("must be positive, got {}", self.pathloss_exponent),
            ));
        }
        if self.rician_k_db.is_nan() || self.rician_k_db == f64::NEG_INFINITY {
            return Err(Error::config(
                "channel.rician_k_db",
                format!("must be a number, got {}", self.rician_k_db),
            ));
        }
        for (name, (lo, hi)) in [
            ("channel.ap_distance_m", self.ap_user_distance),
            ("channel.interuser_distance_m", self.interuser_distance),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
                return Err(Error::config(
                    name,
                    format!("expected 0 < lo <= hi, got [{lo}, {hi}]"),
                ));
            }
        }
        Ok(())
    }

    /// Linear Rician K factor.
    pub fn rician_k(&self) -> f64 {
        10f64.powf(self.rician_k_db / 10.0)
    }
}

impl Default for ChannelGenConfig {
    fn default() -> Self {
        Self {
            pathloss_exponent: 2.2,
            rician_k_db: 2.8,
            ap_user_distance: (2.0, 10.0),
            interuser_distance: (1.0, 4.0),
        }
    }
}

/// Squared channel magnitudes for one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    /// `|h_k|^2`, user k to the access point.
    pub gain_user_ap: [f64; 2],
    /// `|g|^2`, the link between the two users.
    pub gain_interuser: f64,
}

impl ChannelRealization {
    pub fn new(gain_user_ap: [f64; 2], gain_interuser: f64) -> Result<Self> {
        let ch = Self {
            gain_user_ap,
            gain_interuser,
        };
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.gain_user_ap[0],
            self.gain_user_ap[1],
            self.gain_interuser,
        ];
        if all.iter().all(|g| g.is_finite() && *g > 0.0) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "channel gains must be finite and positive, got {all:?}"
            )))
        }
    }
}

/// Primal variables of the CE maximization, indexed by user.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    /// Active transmit power of user k in its own slot (W).
    pub transmit_power: [f64; 2],
    /// Length of user k's active slot (s).
    pub slot_time: [f64; 2],
    /// Reflection coefficient of user k while it backscatters in the partner's slot.
    pub reflection_coeff: [f64; 2],
    /// Local CPU frequency (Hz).
    pub cpu_freq: [f64; 2],
}

impl Decision {
    /// Effective reflected power of user k: `alpha_k * p_j`.
    pub fn backscatter_power(&self, k: usize) -> f64 {
        self.reflection_coeff[k] * self.transmit_power[other(k)]
    }

    /// Flattened view used for lexicographic tie-breaks.
    pub fn as_array(&self) -> [f64; 8] {
        [
            self.transmit_power[0],
            self.transmit_power[1],
            self.slot_time[0],
            self.slot_time[1],
            self.reflection_coeff[0],
            self.reflection_coeff[1],
            self.cpu_freq[0],
            self.cpu_freq[1],
        ]
    }
}
