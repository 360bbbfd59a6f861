//! Property tests over random valid inputs.

use backcom_mec::fp::{dinkelbach_solve, surrogate_rate, update_y};
use backcom_mec::gap::{bits_gap, nonreciprocal_bits, reciprocal_bits, GapCase, GapScenario};
use backcom_mec::model::{
    active_sinr, backscatter_snr, check_constraints, compute_metrics, harvested_energy,
    ChannelRealization, ConstraintId, Decision, SystemParams,
};
use backcom_mec::optimizer::{alternating_solve, Scheme, SolverConfig};
use backcom_mec::subproblem::{recover_alpha, TimeAllocationLp};
use proptest::prelude::*;

fn gain() -> impl Strategy<Value = f64> {
    (-9.0f64..-1.0).prop_map(|e| 10f64.powf(e))
}

fn channel() -> impl Strategy<Value = ChannelRealization> {
    (gain(), gain(), gain()).prop_map(|(h1, h2, g)| ChannelRealization::new([h1, h2], g).unwrap())
}

fn decision() -> impl Strategy<Value = Decision> {
    (
        prop::array::uniform2((-6.0f64..0.0).prop_map(|e| 10f64.powf(e))),
        (0.0f64..1.0, 0.0f64..1.0),
        prop::array::uniform2(0.0f64..=1.0),
        prop::array::uniform2(0.0f64..=1e9),
    )
        .prop_map(|(p, (a, b), alpha, f)| Decision {
            transmit_power: p,
            slot_time: [a, b * (1.0 - a)],
            reflection_coeff: alpha,
            cpu_freq: f,
        })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + 1e-300
}

proptest! {
    #[test]
    fn harvest_falls_with_alpha_and_is_linear_in_power_slot_and_efficiency(
        dec in decision(), ch in channel(), k in 0usize..2, scale in 0.1f64..10.0,
    ) {
        let sys = SystemParams::default();
        let j = 1 - k;
        let base = harvested_energy(&dec, &ch, &sys, k);
        let mut more = dec;
        more.reflection_coeff[k] = (dec.reflection_coeff[k] + 0.1).min(1.0);
        prop_assert!(harvested_energy(&more, &ch, &sys, k) <= base);
        let mut p = dec;
        p.transmit_power[j] *= scale;
        prop_assert!(close(harvested_energy(&p, &ch, &sys, k), scale * base, 1e-12));
        let mut t = dec;
        t.slot_time[j] *= scale;
        prop_assert!(close(harvested_energy(&t, &ch, &sys, k), scale * base, 1e-12));
        let mut z = sys;
        z.eh_coeff *= scale;
        prop_assert!(close(harvested_energy(&dec, &ch, &z, k), scale * base, 1e-12));
    }

    #[test]
    fn sinr_falls_and_backscatter_snr_rises_with_reflection(
        dec in decision(), ch in channel(), k in 0usize..2, step in 0.0f64..0.5,
    ) {
        let sys = SystemParams::default();
        let j = 1 - k;
        let mut partner = dec;
        partner.reflection_coeff[j] = (dec.reflection_coeff[j] + step).min(1.0);
        prop_assert!(active_sinr(&partner, &ch, &sys, k) <= active_sinr(&dec, &ch, &sys, k));
        let mut own = dec;
        own.reflection_coeff[k] = (dec.reflection_coeff[k] + step).min(1.0);
        prop_assert!(backscatter_snr(&own, &ch, &sys, k) >= backscatter_snr(&dec, &ch, &sys, k));
    }

    #[test]
    fn no_reflection_leaves_plain_snr_and_no_backscatter(dec in decision(), ch in channel(), k in 0usize..2) {
        let sys = SystemParams::default();
        let mut d = dec;
        d.reflection_coeff = [0.0, 0.0];
        let plain = d.transmit_power[k] * ch.gain_user_ap[k] / sys.noise_power;
        prop_assert!(close(active_sinr(&d, &ch, &sys, k), plain, 1e-14));
        prop_assert_eq!(backscatter_snr(&d, &ch, &sys, k), 0.0);
    }

    #[test]
    fn ce_times_energy_is_total_bits(dec in decision(), ch in channel()) {
        let sys = SystemParams::default();
        let m = compute_metrics(&dec, &ch, &sys).unwrap();
        prop_assert!(close(m.ce * m.total_energy(), m.total_bits(), 1e-14));
    }

    #[test]
    fn constraint_residual_signs_match_inline_evaluation(dec in decision(), ch in channel()) {
        let sys = SystemParams::default();
        let report = check_constraints(&dec, &ch, &sys);
        let m = compute_metrics(&dec, &ch, &sys).unwrap();
        for k in 0..2 {
            let j = 1 - k;
            let u = &sys.users[k];
            let sinr = dec.transmit_power[k] * ch.gain_user_ap[k]
                / (dec.reflection_coeff[j] * dec.transmit_power[k] * ch.gain_user_ap[j] * ch.gain_interuser
                    + sys.noise_power);
            let sinr_ok = sinr >= u.sinr_threshold;
            let harvest_ok = dec.reflection_coeff[k] == 0.0
                || sys.eh_coeff * (1.0 - dec.reflection_coeff[k]) * dec.transmit_power[j] * ch.gain_interuser
                    >= u.circuit_power_backscatter;
            let bits_ok = m.users[k].total_bits >= u.min_bits;
            let energy = dec.slot_time[k] * (dec.transmit_power[k] + u.circuit_power_active)
                + sys.frame_time * u.capacitance_coeff * dec.cpu_freq[k].powi(3);
            let energy_ok = energy <= u.energy_budget;
            let get = |id| report.get(id, Some(k)).unwrap();
            if dec.slot_time[k] > 1e-6 {
                prop_assert_eq!(get(ConstraintId::SinrThreshold).satisfied, sinr_ok);
            }
            if dec.slot_time[j] > 1e-6 {
                prop_assert_eq!(get(ConstraintId::HarvestedEnergy).satisfied, harvest_ok);
            }
            prop_assert_eq!(get(ConstraintId::MinBits).satisfied, bits_ok);
            prop_assert_eq!(get(ConstraintId::EnergyBudget).satisfied, energy_ok);
            prop_assert!(get(ConstraintId::ReflectionRange).satisfied);
            prop_assert!(get(ConstraintId::CpuFrequency).satisfied);
        }
        prop_assert!(report.get(ConstraintId::FrameTime, None).unwrap().satisfied);
    }

    #[test]
    fn surrogate_is_tight_at_update_y(dec in decision(), ch in channel(), k in 0usize..2) {
        let sys = SystemParams::default();
        let y = update_y(&dec, &ch, &sys, k);
        let m = compute_metrics(&dec, &ch, &sys).unwrap();
        prop_assert!(close(surrogate_rate(&dec, &ch, &sys, y, k).unwrap(), m.users[k].active_bits, 1e-9));
    }

    #[test]
    fn surrogate_never_exceeds_the_rate(
        dec in decision(), ch in channel(), k in 0usize..2, factor in 0.0f64..3.0,
    ) {
        let sys = SystemParams::default();
        let y = factor * update_y(&dec, &ch, &sys, k);
        let m = compute_metrics(&dec, &ch, &sys).unwrap();
        if let Ok(r) = surrogate_rate(&dec, &ch, &sys, y, k) {
            prop_assert!(r <= m.users[k].active_bits * (1.0 + 1e-9) + 1e-9);
        }
    }

    #[test]
    fn recovered_alpha_is_a_coefficient(q in 0.0f64..1.0, incident in 1e-9f64..1.0) {
        let a = recover_alpha(q.min(incident), incident).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn lp_solution_ignores_constraint_order(
        dec in decision(), ch in channel(), eta in 0.0f64..1e9, rot in 0usize..8,
    ) {
        let sys = SystemParams::default();
        let y = [update_y(&dec, &ch, &sys, 0), update_y(&dec, &ch, &sys, 1)];
        let Ok(lp) = TimeAllocationLp::build(&sys, &ch, &dec, y, eta) else {
            return Ok(());
        };
        let mut shuffled = lp.clone();
        let n = shuffled.constraints.len();
        shuffled.constraints.rotate_left(rot % n);
        shuffled.constraints.reverse();
        match (lp.solve(), shuffled.solve()) {
            (Ok(a), Ok(b)) => {
                prop_assert!((a[0] - b[0]).abs() <= 1e-12 && (a[1] - b[1]).abs() <= 1e-12, "{a:?} {b:?}");
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
        }
    }

    #[test]
    fn gap_branch_matches_the_difference(ch in channel(), p0 in 1e-3f64..1.0, user in 0usize..2) {
        let scn = GapScenario { p0, sys: SystemParams::default(), ch, user };
        let r = bits_gap(&scn);
        let diff = reciprocal_bits(&scn, r.alpha) - nonreciprocal_bits(&scn);
        prop_assert!((r.gap - diff).abs() <= 1e-9 * r.reciprocal_bits.max(1.0));
    }

    #[test]
    fn gap_is_nonnegative_under_the_sufficient_conditions(
        ch in channel(), p0 in 1e-3f64..1.0, user in 0usize..2,
    ) {
        let sys = SystemParams::default();
        let scn = GapScenario { p0, sys, ch, user };
        let r = bits_gap(&scn);
        let (k, j) = (user, 1 - user);
        match r.case {
            GapCase::A if ch.gain_interuser > sys.users[j].circuit_power_backscatter / (sys.eh_coeff * p0) => {
                prop_assert!(r.gap >= 0.0);
            }
            GapCase::B if ch.gain_user_ap[k] > sys.users[k].sinr_threshold * sys.noise_power / p0 => {
                prop_assert!(r.gap >= 0.0);
            }
            _ => {}
        }
    }

    #[test]
    fn case_a_gap_grows_with_the_link_gain(ch in channel(), p0 in 1e-3f64..1.0, up in 1.0f64..1.5) {
        let scn = GapScenario { p0, sys: SystemParams::default(), ch, user: 0 };
        let mut stronger = scn;
        stronger.ch.gain_interuser *= up;
        let (a, b) = (bits_gap(&scn), bits_gap(&stronger));
        if a.case == GapCase::A && b.case == GapCase::A {
            prop_assert!(b.gap >= a.gap * (1.0 - 1e-12));
        }
    }

    #[test]
    fn dinkelbach_ratio_rises_with_an_exact_inner_solver(
        freqs in prop::collection::vec(prop::array::uniform2(1.0e8f64..1e9), 2..40),
    ) {
        // Full local computing over a fixed finite set, maximized by enumeration.
        let sys = SystemParams::default().with_users(|u| u.min_bits = 0.0);
        let ch = ChannelRealization::new([1e-4, 1e-4], 1e-2).unwrap();
        let set: Vec<Decision> = freqs
            .iter()
            .map(|f| Decision { cpu_freq: *f, ..Decision::default() })
            .collect();
        let outcome = dinkelbach_solve(
            set[0],
            &sys,
            &ch,
            |eta, _| {
                let value = |d: &Decision| {
                    let m = compute_metrics(d, &ch, &sys).unwrap();
                    m.total_bits() - eta * m.total_energy()
                };
                Ok(*set.iter().max_by(|a, b| value(a).total_cmp(&value(b))).unwrap())
            },
            1e-9,
            100,
        )
        .unwrap();
        prop_assert!(outcome.converged);
        for w in outcome.trace.windows(2) {
            prop_assert!(w[1].eta >= w[0].eta);
        }
        let best = set
            .iter()
            .map(|d| compute_metrics(d, &ch, &sys).unwrap().ce)
            .fold(0.0, f64::max);
        prop_assert!(close(outcome.eta, best, 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn proposed_dominates_and_solves_are_deterministic(seed in any::<u64>()) {
        let cfg = backcom_mec::harness::ExperimentConfig::default();
        let ch = backcom_mec::model::draw_channel(seed, &cfg.channel);
        let solver = SolverConfig::default();
        let proposed = alternating_solve(&cfg.sys, &ch, Scheme::Proposed, &solver);
        prop_assert!(proposed.feasible);
        prop_assert!(check_constraints(&proposed.decision, &ch, &cfg.sys).all_within(1e-9));
        for scheme in [Scheme::FullOffloading, Scheme::FullLocal, Scheme::NonReciprocal] {
            let r = alternating_solve(&cfg.sys, &ch, scheme, &solver);
            if r.feasible {
                prop_assert!(check_constraints(&r.decision, &ch, &cfg.sys).all_within(1e-9));
                prop_assert!(proposed.ce >= r.ce - 1e-6 * proposed.ce, "{scheme}: {} < {}", proposed.ce, r.ce);
            }
        }
        let again = alternating_solve(&cfg.sys, &ch, Scheme::Proposed, &solver);
        prop_assert_eq!(again, proposed);
    }
}
