use serde::{Deserialize, Serialize};

use super::duals::{DualKind, DualMultipliers};
use super::problem_a::{PrimalA, SubproblemAInput};
use crate::error::{Error, Result};
use crate::model::other;

/// Multipliers driven by the coordinate solver, in sweep order. The CPU cap is a
/// box bound of the Lagrangian maximizer, so its multiplier is implied afterwards.
const SWEEP: [DualKind; 6] = [
    DualKind::Surrogate,
    DualKind::Sinr,
    DualKind::Harvest,
    DualKind::ReflectCap,
    DualKind::MinBits,
    DualKind::Budget,
];

/// Beyond this growth factor over the starting guess a multiplier is declared unbounded.
const BRACKET_CAP: f64 = 1e40;
/// Multipliers beyond this mean the block is infeasible (the dual is unbounded below).
const MULTIPLIER_CAP: f64 = 1e100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualAscentConfig {
    /// Maximum number of full sweeps over the multipliers.
    pub max_iters: usize,
    /// Normalized complementary-slackness and primal-residual tolerance.
    pub tol: f64,
    /// Absolute feasibility tolerance of the restored point.
    pub feas_tol: f64,
}

impl Default for DualAscentConfig {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            tol: 1e-6,
            feas_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubproblemASolution {
    /// Feasible point after restoration.
    pub primal: PrimalA,
    /// Maximizer of the Lagrangian at the final multipliers, before restoration.
    pub raw_primal: PrimalA,
    pub duals: DualMultipliers,
    pub objective: f64,
    /// Dual value minus the restored objective; an upper bound on suboptimality.
    pub dual_gap: f64,
    /// Largest normalized KKT violation at the final multipliers.
    pub kkt_violation: f64,
    pub sweeps: usize,
    pub converged: bool,
}

/// Solve the block by exact cyclic coordinate minimization of the dual function.
///
/// Each coordinate derivative of the dual is the constraint value at the Lagrangian
/// maximizer, which is non-decreasing in that coordinate, so every coordinate step
/// is a monotone root search. The returned primal point is the maximizer at the
/// final multipliers pushed back into the feasible set.
pub fn solve_subproblem_a(
    input: &SubproblemAInput,
    cfg: &DualAscentConfig,
) -> Result<SubproblemASolution> {
    solve_subproblem_a_from(input, cfg, &DualMultipliers::default())
}

/// As [`solve_subproblem_a`], warm-started from `start`.
pub fn solve_subproblem_a_from(
    input: &SubproblemAInput,
    cfg: &DualAscentConfig,
    start: &DualMultipliers,
) -> Result<SubproblemASolution> {
    let mut m = DualMultipliers::default();
    for kind in SWEEP {
        for k in 0..2 {
            if input.has_constraint(kind, k) {
                m.set(kind, k, start.get(kind, k).max(0.0));
            }
        }
    }
    let mut sweeps = 0;
    let mut violation = kkt_violation(input, &m);
    while violation > cfg.tol && sweeps < cfg.max_iters {
        sweeps += 1;
        for kind in SWEEP {
            for k in 0..2 {
                if input.has_constraint(kind, k) {
                    coordinate_step(input, &mut m, kind, k, 0.1 * cfg.tol)?;
                }
            }
        }
        violation = kkt_violation(input, &m);
    }
    let raw = input.maximize_lagrangian(&m);
    for k in 0..2 {
        m.cpu_cap[k] = input.implied_cpu_multiplier(&m, &raw, k);
    }
    let primal = restore(input, &raw, cfg.feas_tol).ok_or_else(|| {
        Error::Infeasible("power/reflection block has no feasible restoration".into())
    })?;
    let objective = input.objective(&primal);
    Ok(SubproblemASolution {
        primal,
        raw_primal: raw,
        duals: m,
        objective,
        dual_gap: input.dual_value(&m) - objective,
        kkt_violation: violation,
        sweeps,
        converged: violation <= cfg.tol,
    })
}

/// Largest normalized primal residual or complementary-slackness violation.
pub fn kkt_violation(input: &SubproblemAInput, m: &DualMultipliers) -> f64 {
    let x = input.maximize_lagrangian(m);
    let mut worst: f64 = 0.0;
    for kind in SWEEP {
        for k in 0..2 {
            if !input.has_constraint(kind, k) {
                continue;
            }
            let c = input.constraint(kind, k, &x) / input.constraint_scale(kind, k, &x);
            let v = if m.get(kind, k) > 0.0 { c.abs() } else { (-c).max(0.0) };
            worst = worst.max(v);
        }
    }
    worst
}

/// Starting guess for a multiplier whose current value is zero.
fn guess(input: &SubproblemAInput, kind: DualKind, k: usize) -> f64 {
    let (sys, ch) = (input.sys, input.ch);
    let j = other(k);
    let price = if input.eta > 0.0 { input.eta } else { 1.0 };
    let g = match kind {
        DualKind::Surrogate => {
            input.slot_time[k] * sys.bandwidth / (std::f64::consts::LN_2 * sys.users[k].sinr_threshold)
        }
        DualKind::Sinr => price * input.slot_time[k] / ch.gain_user_ap[k],
        DualKind::Harvest => price / (sys.eh_coeff * ch.gain_interuser),
        DualKind::ReflectCap => price * input.slot_time[j],
        DualKind::MinBits => 1.0,
        DualKind::Budget | DualKind::CpuCap => price,
    };
    if g.is_finite() && g > 0.0 {
        g
    } else {
        1.0
    }
}

/// Exact minimization of the dual along one coordinate.
fn coordinate_step(
    input: &SubproblemAInput,
    m: &mut DualMultipliers,
    kind: DualKind,
    k: usize,
    line_tol: f64,
) -> Result<()> {
    let residual = |m: &mut DualMultipliers, v: f64| -> (f64, f64) {
        m.set(kind, k, v);
        let x = input.maximize_lagrangian(m);
        (
            input.constraint(kind, k, &x),
            input.constraint_scale(kind, k, &x),
        )
    };
    let v0 = m.get(kind, k);
    if !(v0 <= MULTIPLIER_CAP) {
        return Err(Error::Infeasible(format!("{kind:?} multiplier of user {k} diverges")));
    }
    let (r0, s0) = residual(m, v0);
    if r0.abs() <= line_tol * s0 || (v0 == 0.0 && r0 >= 0.0) {
        m.set(kind, k, v0);
        return Ok(());
    }

    // Bracket [lo, hi] with r(lo) < 0 <= r(hi).
    let (mut lo, mut r_lo, mut hi, mut r_hi);
    if r0 < 0.0 {
        lo = v0;
        r_lo = r0;
        let start = if v0 > 0.0 { 2.0 * v0 } else { guess(input, kind, k) };
        let limit = start * BRACKET_CAP;
        hi = start;
        loop {
            let (r, s) = residual(m, hi);
            if r.abs() <= line_tol * s {
                return Ok(());
            }
            if r > 0.0 {
                r_hi = r;
                break;
            }
            lo = hi;
            r_lo = r;
            hi *= 4.0;
            if hi > limit.min(MULTIPLIER_CAP) {
                m.set(kind, k, v0);
                return Err(Error::Infeasible(format!(
                    "{kind:?} multiplier of user {k} diverges"
                )));
            }
        }
    } else {
        hi = v0;
        r_hi = r0;
        let floor = v0 / BRACKET_CAP;
        lo = 0.5 * v0;
        loop {
            let (r, s) = residual(m, lo);
            if r.abs() <= line_tol * s {
                return Ok(());
            }
            if r < 0.0 {
                r_lo = r;
                break;
            }
            hi = lo;
            r_hi = r;
            lo *= 0.25;
            if lo < floor {
                let (r, _) = residual(m, 0.0);
                if r >= 0.0 {
                    return Ok(());
                }
                lo = 0.0;
                r_lo = r;
                break;
            }
        }
    }

    // Illinois false position, in log space when the bracket is positive.
    let log = lo > 0.0;
    let map = |v: f64| if log { v.ln() } else { v };
    let unmap = |u: f64| if log { u.exp() } else { u };
    let (mut a, mut b) = (map(lo), map(hi));
    let (mut fa, mut fb) = (r_lo, r_hi);
    let mut side = 0i8;
    let mut best = (hi, r_hi.abs());
    for _ in 0..200 {
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a && c < b) {
            c = 0.5 * (a + b);
        }
        let v = unmap(c);
        let (r, s) = residual(m, v);
        if r.abs() < best.1 {
            best = (v, r.abs());
        }
        if r.abs() <= line_tol * s {
            return Ok(());
        }
        if r < 0.0 {
            a = c;
            fa = r;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            fb = r;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        let width = if log { b - a } else { (b - a) / b.abs().max(f64::MIN_POSITIVE) };
        if width <= 1e-15 {
            break;
        }
    }
    m.set(kind, k, best.0);
    Ok(())
}

/// Push a Lagrangian maximizer into the feasible set of the block, moving along the
/// power, reflected-power, slack-SINR and frequency axes. Returns `None` when no
/// such move exists.
pub(crate) fn restore(input: &SubproblemAInput, raw: &PrimalA, feas_tol: f64) -> Option<PrimalA> {
    let (sys, ch) = (input.sys, input.ch);
    let g = ch.gain_interuser;
    let shrink = 1.0 - 1e-12;
    let grow = 1.0 + 1e-12;
    let mut x = *raw;
    for k in 0..2 {
        if !input.slot_active(k) {
            x.p[k] = 0.0;
            x.gamma_bar[k] = 0.0;
        }
        if !input.reflects(k) {
            x.q[k] = 0.0;
        }
        x.f[k] = x.f[k].clamp(0.0, input.freq_cap(k));
    }
    // Minimum powers: the SINR threshold without interference, and the circuit
    // power of a partner that reflects in this slot.
    for k in 0..2 {
        if !input.slot_active(k) {
            continue;
        }
        let j = other(k);
        let mut floor = sys.users[k].sinr_threshold * sys.noise_power / ch.gain_user_ap[k];
        if input.reflects(j) {
            floor = floor.max(sys.users[j].circuit_power_backscatter / (sys.eh_coeff * g));
        }
        if x.p[k] < floor * grow {
            x.p[k] = floor * grow;
        }
    }
    // Reflected powers: the partner's SINR, the harvesting requirement and alpha <= 1.
    for k in 0..2 {
        if !input.reflects(k) {
            continue;
        }
        let j = other(k);
        let uj = &sys.users[j];
        let by_sinr = (x.p[j] * ch.gain_user_ap[j] / uj.sinr_threshold - sys.noise_power)
            / (ch.gain_user_ap[k] * g);
        let by_harvest = x.p[j] - sys.users[k].circuit_power_backscatter / (sys.eh_coeff * g);
        let bound = by_sinr.min(by_harvest).min(x.p[j]) * shrink;
        x.q[k] = x.q[k].min(bound).max(0.0);
    }
    for k in 0..2 {
        if input.slot_active(k) {
            x.gamma_bar[k] = 0.0;
            let s = input.constraint(DualKind::Surrogate, k, &x);
            if s < 0.0 {
                return None;
            }
            x.gamma_bar[k] = s * shrink;
        }
    }
    // Budget first, then the bit requirement, both through the CPU frequency.
    for k in 0..2 {
        let u = &sys.users[k];
        let cube = sys.frame_time * u.capacitance_coeff;
        let transmit = input.slot_time[k] * (x.p[k] + u.circuit_power_active);
        if input.constraint(DualKind::Budget, k, &x) < 0.0 {
            let room = u.energy_budget - transmit;
            if room < 0.0 {
                return None;
            }
            x.f[k] = (room / cube).cbrt() * shrink;
        }
        let short = -input.constraint(DualKind::MinBits, k, &x);
        if short > 0.0 {
            x.f[k] += short * u.cpu_cycles_per_bit / sys.frame_time * grow;
            if x.f[k] > input.freq_cap(k) {
                return None;
            }
            if transmit + cube * x.f[k].powi(3) > u.energy_budget + feas_tol {
                return None;
            }
        }
    }
    // Final audit against the block's own constraints.
    for kind in DualKind::ALL {
        for k in 0..2 {
            if input.has_constraint(kind, k) && input.constraint(kind, k, &x) < -feas_tol {
                return None;
            }
        }
    }
    Some(x)
}

