//! Closed-form comparison of the bits a user offloads with and without the
//! partner's backscatter, under equal slots `t_k = T/2`, a common transmit power
//! `P0` and full offloading.

use serde::{Deserialize, Serialize};

use crate::model::{other, ChannelRealization, SystemParams};

/// Constant-power scenario for user `user`; its partner reflects in `user`'s slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapScenario {
    /// Common transmit power (W).
    pub p0: f64,
    pub sys: SystemParams,
    pub ch: ChannelRealization,
    pub user: usize,
}

/// Which term of the reflection-coefficient minimum binds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapCase {
    /// The harvesting limit binds (ties land here).
    A,
    /// The SINR headroom binds.
    B,
    /// The partner cannot reflect at all.
    Inactive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapResult {
    /// Partner's reflection coefficient.
    pub alpha: f64,
    pub reciprocal_bits: f64,
    pub nonreciprocal_bits: f64,
    /// Closed-form branch value of the difference.
    pub gap: f64,
    pub case: GapCase,
}

/// Both candidate terms of the reflection-coefficient minimum: (harvest, SINR).
fn alpha_terms(scn: &GapScenario) -> (f64, f64) {
    let (k, j) = (scn.user, other(scn.user));
    let (sys, ch, p0) = (&scn.sys, &scn.ch, scn.p0);
    let g = ch.gain_interuser;
    let gamma = sys.users[k].sinr_threshold;
    let harvest = 1.0 - sys.users[j].circuit_power_backscatter / (sys.eh_coeff * p0 * g);
    let sinr = (p0 * ch.gain_user_ap[k] - gamma * sys.noise_power)
        / (gamma * p0 * ch.gain_user_ap[j] * g);
    (harvest, sinr)
}

/// Largest partner reflection coefficient that both powers the partner's circuit
/// and keeps user `k`'s active SINR at its threshold.
pub fn alpha_closed_form(scn: &GapScenario) -> f64 {
    let (harvest, sinr) = alpha_terms(scn);
    harvest.min(sinr).max(0.0)
}

fn half_frame_bits(scn: &GapScenario, snr: f64) -> f64 {
    0.5 * scn.sys.frame_time * scn.sys.bandwidth * snr.ln_1p() / std::f64::consts::LN_2
}

/// Active plus backscatter bits of the pair in user `k`'s slot, as the two
/// separately decoded terms.
pub fn reciprocal_bits_split(scn: &GapScenario, alpha: f64) -> (f64, f64) {
    let (k, j) = (scn.user, other(scn.user));
    let (ch, sigma2, p0) = (&scn.ch, scn.sys.noise_power, scn.p0);
    let reflected = alpha * p0 * ch.gain_user_ap[j] * ch.gain_interuser;
    let active = half_frame_bits(scn, p0 * ch.gain_user_ap[k] / (reflected + sigma2));
    (active, half_frame_bits(scn, reflected / sigma2))
}

/// Bits in user `k`'s slot with the partner reflecting at `alpha`.
///
/// # Panics
/// If the two-term split disagrees with the combined form beyond 1e-9 relative.
pub fn reciprocal_bits(scn: &GapScenario, alpha: f64) -> f64 {
    let (k, j) = (scn.user, other(scn.user));
    let (ch, sigma2, p0) = (&scn.ch, scn.sys.noise_power, scn.p0);
    let received = alpha * p0 * ch.gain_user_ap[j] * ch.gain_interuser + p0 * ch.gain_user_ap[k];
    let combined = half_frame_bits(scn, received / sigma2);
    let (active, backscatter) = reciprocal_bits_split(scn, alpha);
    assert!(
        (active + backscatter - combined).abs() <= 1e-9 * combined.abs().max(f64::MIN_POSITIVE),
        "two-term split {} != combined {combined}",
        active + backscatter
    );
    combined
}

/// Bits in user `k`'s slot without backscatter.
pub fn nonreciprocal_bits(scn: &GapScenario) -> f64 {
    let k = scn.user;
    half_frame_bits(scn, scn.p0 * scn.ch.gain_user_ap[k] / scn.sys.noise_power)
}

/// Classify the scenario and evaluate the matching closed-form gap.
///
/// # Panics
/// If the branch value disagrees with `reciprocal - nonreciprocal` beyond 1e-9
/// relative to the reciprocal bits (the operands of the subtraction).
pub fn bits_gap(scn: &GapScenario) -> GapResult {
    let (k, j) = (scn.user, other(scn.user));
    let (sys, ch, p0) = (&scn.sys, &scn.ch, scn.p0);
    let (harvest, sinr) = alpha_terms(scn);
    let alpha = harvest.min(sinr).max(0.0);
    let denom = p0 * ch.gain_user_ap[k] + sys.noise_power;
    let (case, gap) = if alpha <= 0.0 {
        (GapCase::Inactive, 0.0)
    } else if harvest <= sinr {
        let num = (p0 * ch.gain_interuser - sys.users[j].circuit_power_backscatter / sys.eh_coeff)
            * ch.gain_user_ap[j];
        (GapCase::A, half_frame_bits(scn, num / denom))
    } else {
        let gamma = sys.users[k].sinr_threshold;
        let num = p0 * ch.gain_user_ap[k] - gamma * sys.noise_power;
        (GapCase::B, half_frame_bits(scn, num / (denom * gamma)))
    };
    let reciprocal = reciprocal_bits(scn, alpha);
    let nonreciprocal = nonreciprocal_bits(scn);
    let diff = reciprocal - nonreciprocal;
    assert!(
        (gap - diff).abs() <= 1e-9 * reciprocal.abs().max(f64::MIN_POSITIVE),
        "closed-form gap {gap} != difference {diff}"
    );
    GapResult {
        alpha,
        reciprocal_bits: reciprocal,
        nonreciprocal_bits: nonreciprocal,
        gap,
        case,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// P0 = 0.1, |g|^2 = 1e-2, |h_k|^2 = |h_j|^2 = 1e-4, defaults elsewhere.
    fn example(h_partner: f64) -> GapScenario {
        GapScenario {
            p0: 0.1,
            sys: SystemParams::default(),
            ch: ChannelRealization::new([1e-4, h_partner], 1e-2).unwrap(),
            user: 0,
        }
    }

    fn bits(snr: f64) -> f64 {
        5e4 * (1.0 + snr).log2()
    }

    #[test]
    fn case_a_anchor() {
        let scn = example(1e-4);
        let r = bits_gap(&scn);
        assert_eq!(r.case, GapCase::A);
        assert!((r.alpha - 0.875).abs() < 1e-12);
        // alpha P0 |h_j|^2 |g|^2 / (P0 |h_k|^2 + sigma^2) by hand
        let expected = bits(0.875 * 0.1 * 1e-4 * 1e-2 / (0.1 * 1e-4 + 1e-11));
        assert!((r.gap - expected).abs() < 1e-9 * expected);
        assert!((r.gap - 628.0).abs() < 1.0, "{}", r.gap);
        assert!((r.reciprocal_bits - 9.972e5).abs() < 0.001e5);
        assert!((r.nonreciprocal_bits - 9.9658e5).abs() < 0.0001e5);
    }

    #[test]
    fn case_b_anchor() {
        let r = bits_gap(&example(1e-2));
        assert_eq!(r.case, GapCase::B);
        let expected = bits((1e-5 - 1e-9) / ((1e-5 + 1e-11) * 100.0));
        assert!((r.gap - expected).abs() < 1e-9 * expected);
        assert!((r.gap - 718.0).abs() < 1.0, "{}", r.gap);
    }

    #[test]
    fn sinr_at_threshold_leaves_no_reflection() {
        let mut scn = example(1e-4);
        // P0 |h_k|^2 = gamma sigma^2
        scn.ch.gain_user_ap[0] = 100.0 * 1e-11 / 0.1;
        let r = bits_gap(&scn);
        assert_eq!(r.alpha, 0.0);
        assert_eq!(r.case, GapCase::Inactive);
        assert_eq!(r.gap, 0.0);
        assert_eq!(r.reciprocal_bits, r.nonreciprocal_bits);
    }

    #[test]
    fn weak_link_cannot_power_the_circuit() {
        let mut scn = example(1e-4);
        scn.ch.gain_interuser = 1e-4 / (0.8 * 0.1) * 0.5;
        assert_eq!(alpha_closed_form(&scn), 0.0);
    }

    #[test]
    fn nonreciprocal_scales_with_bandwidth_and_vanishes_at_zero_power() {
        let scn = example(1e-4);
        let mut wide = scn;
        wide.sys.bandwidth *= 2.0;
        assert!((nonreciprocal_bits(&wide) - 2.0 * nonreciprocal_bits(&scn)).abs() < 1e-6);
        let mut off = scn;
        off.p0 = 0.0;
        assert_eq!(nonreciprocal_bits(&off), 0.0);
    }

    #[test]
    fn tie_between_terms_gives_equal_branches() {
        let mut scn = example(1e-4);
        // choose |h_j|^2 so the SINR term equals the harvest term 0.875
        let (harvest, sinr) = alpha_terms(&scn);
        scn.ch.gain_user_ap[1] *= sinr / harvest;
        let (harvest, sinr) = alpha_terms(&scn);
        assert!((harvest - sinr).abs() < 1e-12);
        let r = bits_gap(&scn);
        let mut b = scn;
        b.ch.gain_user_ap[1] *= 1.0 + 1e-12;
        let rb = bits_gap(&b);
        assert_eq!(rb.case, GapCase::B);
        assert!((r.gap - rb.gap).abs() < 1e-6 * r.gap);
    }
}
