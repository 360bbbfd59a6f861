//! Scenario types, channel generation and the physical-layer and computing model.

mod channel;
mod constraints;
mod metrics;
mod params;

pub use channel::{draw_channel, path_loss_gain, rician_power};
pub use constraints::{check_constraints, ConstraintEntry, ConstraintId, ConstraintReport};
pub use metrics::{
    active_sinr, backscatter_snr, compute_metrics, harvested_energy, Metrics, UserMetrics,
};
pub use params::{
    other, ChannelGenConfig, ChannelRealization, Decision, SystemParams, UserParams, SLOT_EPS,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn pair_channel() -> ChannelRealization {
        ChannelRealization::new([1e-4, 1e-4], 1e-2).unwrap()
    }

    fn full_local(f: f64) -> Decision {
        Decision {
            cpu_freq: [f, f],
            ..Decision::default()
        }
    }

    #[test]
    fn path_loss_examples() {
        assert_eq!(path_loss_gain(1.0, 2.2).unwrap(), 1.0);
        assert!((path_loss_gain(10.0, 2.2).unwrap() - 6.309_573_444_801_93e-3).abs() < 1e-15);
        assert_eq!(path_loss_gain(5.0, 0.0).unwrap(), 1.0);
        assert!(matches!(path_loss_gain(0.0, 2.2), Err(Error::Domain(_))));
        assert!(matches!(path_loss_gain(-1.0, 2.2), Err(Error::Domain(_))));
    }

    #[test]
    fn line_of_sight_limit_is_pure_path_loss() {
        let cfg = ChannelGenConfig {
            rician_k_db: f64::INFINITY,
            ap_user_distance: (4.0, 4.0),
            interuser_distance: (2.0, 2.0),
            ..ChannelGenConfig::default()
        };
        let ch = draw_channel(7, &cfg);
        let h = 4f64.powf(-2.2);
        assert!((ch.gain_user_ap[0] - h).abs() < 1e-15);
        assert!((ch.gain_user_ap[1] - h).abs() < 1e-15);
        assert!((ch.gain_interuser - 2f64.powf(-2.2)).abs() < 1e-15);
    }

    #[test]
    fn channel_draw_is_deterministic() {
        let cfg = ChannelGenConfig::default();
        assert_eq!(draw_channel(42, &cfg), draw_channel(42, &cfg));
        assert_ne!(draw_channel(42, &cfg), draw_channel(43, &cfg));
    }

    #[test]
    fn harvested_energy_examples() {
        let sys = SystemParams::default();
        let ch = ChannelRealization::new([1e-4, 1e-4], 0.01).unwrap();
        let dec = Decision {
            transmit_power: [0.0, 2.0],
            slot_time: [0.0, 0.5],
            reflection_coeff: [0.25, 0.0],
            ..Decision::default()
        };
        assert!((harvested_energy(&dec, &ch, &sys, 0) - 0.006).abs() < 1e-15);

        let mut full = dec;
        full.reflection_coeff[0] = 1.0;
        assert_eq!(harvested_energy(&full, &ch, &sys, 0), 0.0);

        let mut no_eh = sys;
        no_eh.eh_coeff = 0.0;
        assert_eq!(harvested_energy(&dec, &ch, &no_eh, 0), 0.0);
    }

    #[test]
    fn sinr_and_snr_examples() {
        let sys = SystemParams::default();
        let ch = pair_channel();
        let dec = Decision {
            transmit_power: [0.1, 0.1],
            slot_time: [0.5, 0.5],
            reflection_coeff: [0.0, 0.875],
            ..Decision::default()
        };
        let sinr = active_sinr(&dec, &ch, &sys, 0);
        assert!((sinr - 1e-5 / 8.751e-8).abs() < 1e-9);
        assert!((sinr - 114.28).abs() < 0.01);
        // user 1 reflects user 0's signal
        assert!((backscatter_snr(&dec, &ch, &sys, 1) - 8750.0).abs() < 1e-9);
        assert_eq!(backscatter_snr(&dec, &ch, &sys, 0), 0.0);
        // no interference on user 1's own slot
        assert!((active_sinr(&dec, &ch, &sys, 1) - 0.1 * 1e-4 / 1e-11).abs() < 1e-6);

        let mut doubled = dec;
        doubled.reflection_coeff[1] = 0.4375 * 2.0;
        let mut half = dec;
        half.reflection_coeff[1] = 0.4375;
        assert!(
            (backscatter_snr(&doubled, &ch, &sys, 1) - 2.0 * backscatter_snr(&half, &ch, &sys, 1))
                .abs()
                < 1e-9
        );

        let silent = Decision {
            transmit_power: [0.0, 0.1],
            ..dec
        };
        assert_eq!(active_sinr(&silent, &ch, &sys, 0), 0.0);
    }

    #[test]
    fn full_local_metrics() {
        let sys = SystemParams::default();
        let m = compute_metrics(&full_local(2e8), &pair_channel(), &sys).unwrap();
        for u in &m.users {
            assert!((u.total_bits - 2e5).abs() < 1e-6);
            assert!((u.total_energy - 0.08).abs() < 1e-15);
        }
        assert!((m.ce - 2.5e6).abs() < 1e-6);
    }

    #[test]
    fn all_zero_decision_has_no_activity() {
        let sys = SystemParams::default();
        let err = compute_metrics(&Decision::default(), &pair_channel(), &sys);
        assert!(matches!(err, Err(Error::NoActivity)));
    }

    #[test]
    fn full_local_constraint_conventions() {
        let sys = SystemParams::default();
        let report = check_constraints(&full_local(2e8), &pair_channel(), &sys);
        assert!(report.all_satisfied(), "{report:?}");
        for k in 0..2 {
            let c1 = report.get(ConstraintId::ReflectionRange, Some(k)).unwrap();
            assert!(c1.satisfied);
            assert!(report.get(ConstraintId::HarvestedEnergy, Some(k)).unwrap().vacuous);
            assert!(report.get(ConstraintId::SinrThreshold, Some(k)).unwrap().vacuous);
        }
    }

    #[test]
    fn frame_overrun_is_reported() {
        let sys = SystemParams::default();
        let dec = Decision {
            transmit_power: [0.1, 0.1],
            slot_time: [0.75, 0.75],
            ..Decision::default()
        };
        let report = check_constraints(&dec, &pair_channel(), &sys);
        let c2 = report.get(ConstraintId::FrameTime, None).unwrap();
        assert!(!c2.satisfied);
        assert!((c2.residual - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sinr_gate_with_backscatter_interference() {
        let sys = SystemParams::default();
        let dec = Decision {
            transmit_power: [0.1, 0.1],
            slot_time: [0.5, 0.5],
            reflection_coeff: [0.0, 0.875],
            ..Decision::default()
        };
        let report = check_constraints(&dec, &pair_channel(), &sys);
        let c5 = report.get(ConstraintId::SinrThreshold, Some(0)).unwrap();
        assert!(c5.satisfied);
        assert!((c5.residual - (100.0 - 1e-5 / 8.751e-8)).abs() < 1e-9);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let mut sys = SystemParams::default();
        sys.users[1].sinr_threshold = 0.5;
        assert!(sys.validate().is_err());
        let mut sys = SystemParams::default();
        sys.bandwidth = -1.0;
        assert!(matches!(sys.validate(), Err(Error::Config { path, .. }) if path == "bandwidth"));
        assert!(ChannelRealization::new([0.0, 1.0], 1.0).is_err());
    }
}
