use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{other, ChannelRealization, SystemParams};

/// Which constraint of the power/reflection/frequency subproblem a multiplier prices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DualKind {
    /// `q_k <= p_j`.
    ReflectCap,
    /// `f_k <= f_max`.
    CpuCap,
    /// Harvested power covers the backscatter circuit.
    Harvest,
    /// SINR threshold of the active signal.
    Sinr,
    /// Minimum computed bits.
    MinBits,
    /// Energy budget.
    Budget,
    /// Quadratic-transform slack bound on the SINR variable.
    Surrogate,
}

impl DualKind {
    pub const ALL: [DualKind; 7] = [
        DualKind::ReflectCap,
        DualKind::CpuCap,
        DualKind::Harvest,
        DualKind::Sinr,
        DualKind::MinBits,
        DualKind::Budget,
        DualKind::Surrogate,
    ];
}

/// Non-negative Lagrange multipliers, one of each kind per user.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DualMultipliers {
    pub reflect_cap: [f64; 2],
    pub cpu_cap: [f64; 2],
    pub harvest: [f64; 2],
    pub sinr: [f64; 2],
    pub min_bits: [f64; 2],
    pub budget: [f64; 2],
    pub surrogate: [f64; 2],
}

impl DualMultipliers {
    pub fn get(&self, kind: DualKind, k: usize) -> f64 {
        self.slot(kind)[k]
    }

    pub fn set(&mut self, kind: DualKind, k: usize, value: f64) {
        self.slot_mut(kind)[k] = value;
    }

    fn slot(&self, kind: DualKind) -> &[f64; 2] {
        match kind {
            DualKind::ReflectCap => &self.reflect_cap,
            DualKind::CpuCap => &self.cpu_cap,
            DualKind::Harvest => &self.harvest,
            DualKind::Sinr => &self.sinr,
            DualKind::MinBits => &self.min_bits,
            DualKind::Budget => &self.budget,
            DualKind::Surrogate => &self.surrogate,
        }
    }

    fn slot_mut(&mut self, kind: DualKind) -> &mut [f64; 2] {
        match kind {
            DualKind::ReflectCap => &mut self.reflect_cap,
            DualKind::CpuCap => &mut self.cpu_cap,
            DualKind::Harvest => &mut self.harvest,
            DualKind::Sinr => &mut self.sinr,
            DualKind::MinBits => &mut self.min_bits,
            DualKind::Budget => &mut self.budget,
            DualKind::Surrogate => &mut self.surrogate,
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        DualKind::ALL
            .iter()
            .all(|&kind| self.slot(kind).iter().all(|v| *v >= 0.0))
    }
}

/// Denominator of the power stationarity condition for user k.
///
/// Besides the energy price and the SINR multiplier, the partner's reflection cap
/// and harvesting multipliers also act on `p_k`, because the partner reflects
/// `q_j <= p_k` and harvests from `p_k - q_j`.
pub(crate) fn power_denominator(
    duals: &DualMultipliers,
    k: usize,
    slot_time: f64,
    eta: f64,
    ch: &ChannelRealization,
    sys: &SystemParams,
) -> f64 {
    let j = other(k);
    (eta + duals.budget[k]) * slot_time
        - duals.sinr[k] * ch.gain_user_ap[k]
        - duals.reflect_cap[j]
        - duals.harvest[j] * slot_time * sys.eh_coeff * ch.gain_interuser
}

/// Stationary transmit power `(y |h| kappa / D)^2`.
pub fn primal_p(
    duals: &DualMultipliers,
    k: usize,
    y: f64,
    slot_time: f64,
    eta: f64,
    ch: &ChannelRealization,
    sys: &SystemParams,
) -> Result<f64> {
    let d = power_denominator(duals, k, slot_time, eta, ch, sys);
    let n = duals.surrogate[k] * y * ch.gain_user_ap[k].sqrt();
    if n == 0.0 {
        return Ok(0.0);
    }
    if !(d > 0.0) {
        return Err(Error::UnboundedDirection {
            what: "transmit power",
            denominator: d,
        });
    }
    Ok((n / d).powi(2))
}

/// Denominator of the reflected-power stationarity condition for user k.
pub(crate) fn reflect_denominator(
    duals: &DualMultipliers,
    k: usize,
    partner_slot: f64,
    partner_y: f64,
    ch: &ChannelRealization,
    sys: &SystemParams,
) -> f64 {
    let j = other(k);
    let coupling = (duals.sinr[j] * sys.users[j].sinr_threshold
        + duals.surrogate[j] * partner_y * partner_y)
        * ch.gain_user_ap[k]
        * ch.gain_interuser;
    duals.reflect_cap[k] + duals.harvest[k] * partner_slot * sys.eh_coeff * ch.gain_interuser + coupling
}

/// Stationary reflected power `q_k = alpha_k p_j`, water-filled and clipped to `[0, p_j]`.
///
/// The partner's SINR and surrogate multipliers enter the denominator because
/// `q_k` is also the interference term of the partner's active signal.
pub fn primal_q(
    duals: &DualMultipliers,
    k: usize,
    partner_slot: f64,
    partner_y: f64,
    partner_power: f64,
    ch: &ChannelRealization,
    sys: &SystemParams,
) -> Result<f64> {
    let numerator = partner_slot * sys.bandwidth * (1.0 + duals.min_bits[k]) / LN_2;
    let d = reflect_denominator(duals, k, partner_slot, partner_y, ch, sys);
    if numerator <= 0.0 {
        return Ok(0.0);
    }
    if !(d > 0.0) {
        return Err(Error::UnboundedDirection {
            what: "reflected power",
            denominator: d,
        });
    }
    let floor = sys.noise_power / (ch.gain_user_ap[k] * ch.gain_interuser);
    Ok((numerator / d - floor).max(0.0).min(partner_power))
}

/// Stationary CPU frequency, clipped to `[0, f_max]`. The budget multiplier prices
/// local energy alongside `eta`.
pub fn primal_f(duals: &DualMultipliers, sys: &SystemParams, eta: f64, k: usize) -> f64 {
    let u = &sys.users[k];
    let t = sys.frame_time;
    let numerator = (1.0 + duals.min_bits[k]) * t / u.cpu_cycles_per_bit - duals.cpu_cap[k];
    if numerator <= 0.0 {
        return 0.0;
    }
    let price = eta + duals.budget[k];
    if price <= 0.0 {
        return u.f_max;
    }
    (numerator / (3.0 * t * u.capacitance_coeff * price))
        .sqrt()
        .min(u.f_max)
}

/// Stationary slack SINR `[t B (1 + omega) / (ln2 kappa) - 1]^+`.
pub fn primal_gamma(
    duals: &DualMultipliers,
    slot_time: f64,
    bandwidth: f64,
    k: usize,
) -> Result<f64> {
    let kappa = duals.surrogate[k];
    if !(kappa > 0.0) {
        return Err(Error::UnboundedDirection {
            what: "slack SINR",
            denominator: kappa,
        });
    }
    Ok((slot_time * bandwidth * (1.0 + duals.min_bits[k]) / (LN_2 * kappa) - 1.0).max(0.0))
}

/// Reflection coefficient from the reflected power and the incident power.
pub fn recover_alpha(q: f64, incident: f64) -> Result<f64> {
    if q < 0.0 || q > incident || (incident == 0.0 && q > 0.0) {
        return Err(Error::Inconsistent { q, incident });
    }
    if incident == 0.0 {
        return Ok(0.0);
    }
    Ok((q / incident).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys_ch() -> (SystemParams, ChannelRealization) {
        (
            SystemParams::default(),
            ChannelRealization::new([1e-4, 1e-4], 1e-2).unwrap(),
        )
    }

    #[test]
    fn power_examples() {
        let (sys, ch) = sys_ch();
        let mut d = DualMultipliers::default();
        assert_eq!(primal_p(&d, 0, 3e4, 0.5, 2e6, &ch, &sys).unwrap(), 0.0);

        d.surrogate[0] = 1e-5;
        let p = primal_p(&d, 0, 3e4, 0.5, 2e6, &ch, &sys).unwrap();
        assert!((p / 9e-18 - 1.0).abs() < 1e-12, "{p}");

        let mut scaled = d;
        scaled.surrogate[0] = 3e-5;
        let p3 = primal_p(&scaled, 0, 3e4, 0.5, 2e6, &ch, &sys).unwrap();
        assert!((p3 / p - 9.0).abs() < 1e-9);

        let mut bad = d;
        bad.sinr[0] = 1e12;
        assert!(matches!(
            primal_p(&bad, 0, 3e4, 0.5, 2e6, &ch, &sys),
            Err(Error::UnboundedDirection { .. })
        ));
    }

    #[test]
    fn reflected_power_examples() {
        let (sys, ch) = sys_ch();
        let mut d = DualMultipliers::default();
        d.harvest[0] = 1.0;
        let unclipped = primal_q(&d, 0, 0.5, 0.0, f64::INFINITY, &ch, &sys).unwrap();
        let expected = 0.5 * 1e5 / (LN_2 * 1.0 * 0.5 * 0.8 * 1e-2) - 1e-11 / 1e-6;
        assert!((unclipped / expected - 1.0).abs() < 1e-12);
        assert!((unclipped - 1.8034e7).abs() < 1e3);
        assert_eq!(primal_q(&d, 0, 0.5, 0.0, 0.1, &ch, &sys).unwrap(), 0.1);

        // cutoff: a steep price leaves nothing above the noise floor
        d.harvest[0] = 1e20;
        assert_eq!(primal_q(&d, 0, 0.5, 0.0, 1.0, &ch, &sys).unwrap(), 0.0);

        let zero = DualMultipliers::default();
        assert!(primal_q(&zero, 0, 0.5, 0.0, 1.0, &ch, &sys).is_err());
    }

    #[test]
    fn frequency_examples() {
        let sys = SystemParams::default();
        let d = DualMultipliers::default();
        let f = primal_f(&d, &sys, 2.5e6, 0);
        assert!((f - (1e-3f64 / (3e-26 * 2.5e6)).sqrt()).abs() < 1e-3);
        assert!((f - 1.1547e8).abs() < 1e4);

        let mut capped = d;
        capped.cpu_cap[0] = 1e-3;
        assert_eq!(primal_f(&capped, &sys, 2.5e6, 0), 0.0);
        assert_eq!(primal_f(&d, &sys, 1e-9, 0), 1e9);
    }

    #[test]
    fn slack_sinr_examples() {
        let mut d = DualMultipliers::default();
        d.surrogate[0] = 1e4;
        let g = primal_gamma(&d, 0.5, 1e5, 0).unwrap();
        assert!((g - (5e4 / (LN_2 * 1e4) - 1.0)).abs() < 1e-12);
        assert!((g - 6.2135).abs() < 1e-4);
        d.min_bits[0] = 1.0;
        let g2 = primal_gamma(&d, 0.5, 1e5, 0).unwrap();
        assert!((g2 - (2.0 * (g + 1.0) - 1.0)).abs() < 1e-12);
        assert!((g2 - 13.427).abs() < 1e-3);
        d.surrogate[0] = 1e12;
        assert_eq!(primal_gamma(&d, 0.5, 1e5, 0).unwrap(), 0.0);
        d.surrogate[0] = 0.0;
        assert!(primal_gamma(&d, 0.5, 1e5, 0).is_err());
    }

    #[test]
    fn alpha_recovery() {
        assert_eq!(recover_alpha(0.0, 0.1).unwrap(), 0.0);
        assert_eq!(recover_alpha(0.1, 0.1).unwrap(), 1.0);
        assert!((recover_alpha(0.0875, 0.1).unwrap() - 0.875).abs() < 1e-15);
        assert_eq!(recover_alpha(0.0, 0.0).unwrap(), 0.0);
        assert!(recover_alpha(0.2, 0.1).is_err());
        assert!(recover_alpha(1e-9, 0.0).is_err());
    }
}
