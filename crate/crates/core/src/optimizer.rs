//! The full CE maximization: feasible initialization, benchmark restrictions and
//! the alternating loop (auxiliary update, power/reflection/frequency block, slot
//! times) nested inside the Dinkelbach loop.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fp::{dinkelbach_solve, surrogate_sinr, update_y, DinkelbachState};
use crate::model::{
    backscatter_snr, check_constraints, compute_metrics, other, ChannelRealization,
    ConstraintReport, Decision, Metrics, SystemParams, SLOT_EPS,
};
use crate::subproblem::{
    recover_alpha, solve_subproblem_a, solve_subproblem_b, DualAscentConfig, SubproblemAInput,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Proposed,
    FullOffloading,
    FullLocal,
    NonReciprocal,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::Proposed,
        Scheme::FullOffloading,
        Scheme::FullLocal,
        Scheme::NonReciprocal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::FullOffloading => "full-offloading",
            Scheme::FullLocal => "full-local",
            Scheme::NonReciprocal => "non-reciprocal",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|scheme| scheme.name() == s)
            .ok_or_else(|| {
                Error::config(
                    "scheme",
                    format!(
                        "unknown scheme `{s}`, expected one of proposed, full-offloading, \
                         full-local, non-reciprocal"
                    ),
                )
            })
    }
}

/// Which parts of the decision a scheme leaves free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Restriction {
    /// Active slots (and with them backscatter) may be used.
    pub offloading: bool,
    /// Users may reflect in the partner's slot.
    pub backscatter: bool,
    pub local_computing: bool,
}

impl Restriction {
    /// Zero every variable the scheme fixes.
    pub fn restrict(&self, dec: &Decision) -> Decision {
        let mut out = *dec;
        if !self.offloading {
            out.transmit_power = [0.0; 2];
            out.slot_time = [0.0; 2];
        }
        if !self.offloading || !self.backscatter {
            out.reflection_coeff = [0.0; 2];
        }
        if !self.local_computing {
            out.cpu_freq = [0.0; 2];
        }
        out
    }

    /// Backscatter on/off patterns searched by the power/reflection block. The
    /// harvesting constraint only exists while a user reflects, so each pattern is
    /// a separate convex piece.
    pub fn pieces(&self) -> Vec<[bool; 2]> {
        if self.offloading && self.backscatter {
            vec![[true, true], [true, false], [false, true], [false, false]]
        } else {
            vec![[false, false]]
        }
    }
}

pub fn apply_scheme(scheme: Scheme) -> Restriction {
    match scheme {
        Scheme::Proposed => Restriction {
            offloading: true,
            backscatter: true,
            local_computing: true,
        },
        Scheme::FullOffloading => Restriction {
            offloading: true,
            backscatter: true,
            local_computing: false,
        },
        Scheme::FullLocal => Restriction {
            offloading: false,
            backscatter: false,
            local_computing: true,
        },
        Scheme::NonReciprocal => Restriction {
            offloading: true,
            backscatter: false,
            local_computing: true,
        },
    }
}

/// Safety margin applied when a constructed point sits exactly on a constraint.
const MARGIN: f64 = 1e-9;

/// Slot scans per solve, frame splits per scan and refinement passes
/// per split.
const MAX_SCANS: usize = 3;
const SCAN_POINTS: usize = 20;
const SCAN_REFINE: usize = 30;

/// Build a feasible starting decision for `scheme`.
///
/// Slots get `T/2` each and powers twice the interference-free SINR floor.
/// Reflection is `min(0.5, harvesting limit)` capped by the partner's SINR headroom,
/// and the CPU frequency covers the remaining bit requirement. When that point
/// fails, the power scale is swept (with and without reflection) before the
/// instance is declared infeasible.
pub fn initialize_feasible(
    sys: &SystemParams,
    ch: &ChannelRealization,
    scheme: Scheme,
) -> Result<Decision> {
    let r = apply_scheme(scheme);
    let patterns: &[bool] = if r.backscatter { &[true, false] } else { &[false] };
    initialize_with(sys, ch, scheme, patterns)
}

/// [`initialize_feasible`] restricted to the given reflection patterns.
fn initialize_with(
    sys: &SystemParams,
    ch: &ChannelRealization,
    scheme: Scheme,
    patterns: &[bool],
) -> Result<Decision> {
    let r = apply_scheme(scheme);
    let admissible = |d: &Decision| check_constraints(d, ch, sys).all_satisfied();
    if !r.offloading {
        let mut dec = Decision::default();
        for k in 0..2 {
            dec.cpu_freq[k] = local_frequency(sys, k, sys.users[k].min_bits, 0.0)
                .ok_or_else(|| Error::Infeasible(format!("user {k} cannot compute its bits locally")))?;
        }
        return if admissible(&dec) {
            Ok(dec)
        } else {
            Err(Error::Infeasible("local computing exceeds the energy budget".into()))
        };
    }

    let t = sys.frame_time / 2.0;
    let floor: [f64; 2] =
        std::array::from_fn(|k| sys.users[k].sinr_threshold * sys.noise_power / ch.gain_user_ap[k]);
    let cap: [f64; 2] = std::array::from_fn(|k| {
        sys.users[k].energy_budget / t - sys.users[k].circuit_power_active
    });
    // nominal scale first, then a bounded geometric sweep
    let scales = std::iter::once(2.0).chain((1..=96).map(|i| 2f64.powf(i as f64 / 4.0 - 0.75)));
    for scale in scales {
        let mut dec = Decision {
            slot_time: [t, t],
            ..Decision::default()
        };
        for k in 0..2 {
            dec.transmit_power[k] = (scale * floor[k]).min(cap[k]);
        }
        for &reflect in patterns {
            if reflect {
                for k in 0..2 {
                    dec.reflection_coeff[k] = initial_alpha(sys, ch, &dec, k);
                }
            } else {
                dec.reflection_coeff = [0.0; 2];
            }
            let mut ok = true;
            for k in 0..2 {
                let offloaded = {
                    let mut d = dec;
                    d.cpu_freq = [0.0; 2];
                    compute_metrics(&d, ch, sys)
                        .map(|m| m.users[k].total_bits)
                        .unwrap_or(0.0)
                };
                let transmit = t * (dec.transmit_power[k] + sys.users[k].circuit_power_active);
                match local_frequency(sys, k, sys.users[k].min_bits - offloaded, transmit) {
                    Some(f) if r.local_computing || f == 0.0 => dec.cpu_freq[k] = f,
                    _ => ok = false,
                }
            }
            if ok && admissible(&dec) {
                return Ok(r.restrict(&dec));
            }
        }
    }
    Err(Error::Infeasible(format!(
        "no feasible starting point for the {scheme} scheme"
    )))
}

/// Smallest CPU frequency computing `bits` locally, if the frequency cap and the
/// energy left after `transmit_energy` allow it.
fn local_frequency(sys: &SystemParams, k: usize, bits: f64, transmit_energy: f64) -> Option<f64> {
    let u = &sys.users[k];
    if bits <= 0.0 {
        return Some(0.0);
    }
    let f = bits * u.cpu_cycles_per_bit / sys.frame_time * (1.0 + MARGIN);
    let energy = transmit_energy + sys.frame_time * u.capacitance_coeff * f.powi(3);
    (f <= u.f_max && energy <= u.energy_budget).then_some(f)
}

fn initial_alpha(sys: &SystemParams, ch: &ChannelRealization, dec: &Decision, k: usize) -> f64 {
    let j = other(k);
    let p_j = dec.transmit_power[j];
    let g = ch.gain_interuser;
    let by_harvest = 1.0 - sys.users[k].circuit_power_backscatter / (sys.eh_coeff * p_j * g);
    // partner's SINR: p_j h_j / (alpha p_j h_k g + sigma^2) >= gamma_j
    let by_sinr = (p_j * ch.gain_user_ap[j] / sys.users[j].sinr_threshold - sys.noise_power)
        / (p_j * ch.gain_user_ap[k] * g);
    let alpha = 0.5f64.min(by_harvest).min(by_sinr) * (1.0 - MARGIN);
    if alpha > 0.0 {
        alpha.min(1.0 - MARGIN)
    } else {
        0.0
    }
}

/// Objective of the parametric problem with the quadratic-transform surrogate at
/// `y` in place of the active rates: `sum bits - eta * sum energy`.
pub fn surrogate_objective(
    dec: &Decision,
    ch: &ChannelRealization,
    sys: &SystemParams,
    y: [f64; 2],
    eta: f64,
) -> f64 {
    let mut value = 0.0;
    for k in 0..2 {
        let j = other(k);
        let u = &sys.users[k];
        let f = dec.cpu_freq[k];
        let active = if dec.transmit_power[k] > 0.0 {
            surrogate_sinr(dec, ch, sys, y[k], k).max(0.0)
        } else {
            0.0
        };
        let bits = sys.frame_time * f / u.cpu_cycles_per_bit
            + dec.slot_time[k] * sys.bandwidth * active.log2_1p()
            + dec.slot_time[j] * sys.bandwidth * backscatter_snr(dec, ch, sys, k).log2_1p();
        let energy = dec.slot_time[k] * (dec.transmit_power[k] + u.circuit_power_active)
            + sys.frame_time * u.capacitance_coeff * f * f * f;
        value += bits - eta * energy;
    }
    value
}

trait Log2OnePlus {
    fn log2_1p(self) -> f64;
}

impl Log2OnePlus for f64 {
    fn log2_1p(self) -> f64 {
        self.ln_1p() / std::f64::consts::LN_2
    }
}

fn tight_y(dec: &Decision, ch: &ChannelRealization, sys: &SystemParams) -> [f64; 2] {
    [update_y(dec, ch, sys, 0), update_y(dec, ch, sys, 1)]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Dinkelbach stop: `|F(eta)| <= dinkelbach_tol * max(1, sum E)`.
    pub dinkelbach_tol: f64,
    pub max_outer: usize,
    /// Alternating loop stop: one full pass gains at most `inner_tol` relative to
    /// the parametric objective.
    pub inner_tol: f64,
    pub max_inner: usize,
    /// Constraint tolerance, native units, for accepting a block update.
    pub feas_tol: f64,
    /// Also start the proposed scheme from each benchmark's solution and the
    /// full-offloading scheme from a non-reflecting point, keeping the best result.
    pub multi_start: bool,
    /// Extrapolate slot-time moves with the power block re-solved (monotone).
    pub extrapolate: bool,
    /// Block solver settings. The sweep cap is low because block results are only
    /// accepted when they improve the objective; full dual convergence can take
    /// thousands of sweeps on tightly coupled blocks and rarely changes the outcome.
    pub dual: DualAscentConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dinkelbach_tol: crate::fp::DINKELBACH_TOL,
            max_outer: crate::fp::DINKELBACH_MAX_OUTER,
            inner_tol: 1e-6,
            max_inner: 100,
            feas_tol: 1e-10,
            multi_start: true,
            extrapolate: true,
            dual: DualAscentConfig {
                max_iters: 30,
                ..DualAscentConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Block {
    Auxiliary,
    PowerReflectionFrequency,
    SlotTimes,
    Extrapolation,
    /// Scan of slot splits with the power block iterated to convergence at each.
    SlotScan,
}

/// Surrogate parametric objective after one block of the alternating loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerStep {
    pub outer: usize,
    pub iteration: usize,
    pub block: Block,
    pub eta: f64,
    pub objective: f64,
    /// Whether the block's candidate replaced the current point.
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub scheme: Scheme,
    pub feasible: bool,
    pub decision: Decision,
    /// Present for feasible reports.
    pub metrics: Option<Metrics>,
    /// Final CE (bits/J); zero when infeasible.
    pub ce: f64,
    pub outer_iterations: usize,
    /// Alternating iterations run in each outer iteration.
    pub inner_iterations: Vec<usize>,
    pub dinkelbach: Vec<DinkelbachState>,
    pub converged: bool,
    pub constraints: Option<ConstraintReport>,
    pub trace: Vec<InnerStep>,
    pub warnings: Vec<String>,
}

impl SolveReport {
    fn infeasible(scheme: Scheme, reason: String) -> Self {
        Self {
            scheme,
            feasible: false,
            decision: Decision::default(),
            metrics: None,
            ce: 0.0,
            outer_iterations: 0,
            inner_iterations: Vec::new(),
            dinkelbach: Vec::new(),
            converged: false,
            constraints: None,
            trace: Vec::new(),
            warnings: vec![reason],
        }
    }

    pub fn total_inner_iterations(&self) -> usize {
        self.inner_iterations.iter().sum()
    }

    /// Largest final Dinkelbach residual `|F| / max(1, sum E)`.
    pub fn dinkelbach_residual(&self) -> f64 {
        match (self.dinkelbach.last(), &self.metrics) {
            (Some(s), Some(m)) => s.last_objective.abs() / m.total_energy().max(1.0),
            _ => f64::INFINITY,
        }
    }
}

struct Alternation<'a> {
    sys: &'a SystemParams,
    ch: &'a ChannelRealization,
    restriction: Restriction,
    cfg: &'a SolverConfig,
    trace: Vec<InnerStep>,
    inner_iterations: Vec<usize>,
    warnings: Vec<String>,
    /// Slot scans left for this solve.
    scans_left: usize,
}

impl Alternation<'_> {
    fn admissible(&self, dec: &Decision) -> bool {
        check_constraints(dec, self.ch, self.sys).all_within(self.cfg.feas_tol)
    }

    fn objective(&self, dec: &Decision, y: [f64; 2], eta: f64) -> f64 {
        surrogate_objective(dec, self.ch, self.sys, y, eta)
    }

    /// Best point of the power/reflection/frequency block over all pieces.
    fn block_a(&mut self, dec: &Decision, y: [f64; 2], eta: f64) -> Option<(Decision, f64)> {
        self.block_a_pieces(dec, y, eta, &self.restriction.pieces())
    }

    fn block_a_pieces(
        &mut self,
        dec: &Decision,
        y: [f64; 2],
        eta: f64,
        pieces: &[[bool; 2]],
    ) -> Option<(Decision, f64)> {
        let mut best: Option<(Decision, f64)> = None;
        for &piece in pieces {
            let input = SubproblemAInput {
                sys: self.sys,
                ch: self.ch,
                slot_time: dec.slot_time,
                y,
                eta,
                backscatter: piece,
                local_computing: self.restriction.local_computing,
            };
            let Ok(sol) = solve_subproblem_a(&input, &self.cfg.dual) else {
                continue;
            };
            let x = sol.primal;
            let mut cand = Decision {
                transmit_power: x.p,
                slot_time: dec.slot_time,
                reflection_coeff: [0.0; 2],
                cpu_freq: x.f,
            };
            let mut consistent = true;
            for k in 0..2 {
                match recover_alpha(x.q[k], x.p[other(k)]) {
                    Ok(a) => cand.reflection_coeff[k] = a,
                    Err(_) => consistent = false,
                }
            }
            if !consistent {
                continue;
            }
            let value = self.objective(&cand, y, eta);
            if best.is_none_or(|(_, v)| value > v) {
                best = Some((cand, value));
            }
        }
        best
    }

    /// Line search along this iteration's slot-time move, re-solving the
    /// power/reflection/frequency block at each trial length. The two blocks are
    /// coupled through binding bit constraints, and plain alternation crawls along
    /// that ridge in tiny steps.
    fn extrapolate(
        &mut self,
        dec: &Decision,
        from: [f64; 2],
        y: [f64; 2],
        eta: f64,
        value: f64,
    ) -> Option<(Decision, f64)> {
        let d = [dec.slot_time[0] - from[0], dec.slot_time[1] - from[1]];
        if d == [0.0, 0.0] {
            return None;
        }
        // longest step keeping t >= 0 and t_1 + t_2 <= T
        let mut limit = f64::INFINITY;
        for k in 0..2 {
            if d[k] < 0.0 {
                limit = limit.min(-dec.slot_time[k] / d[k]);
            }
        }
        let total = d[0] + d[1];
        if total > 0.0 {
            limit = limit.min((self.sys.frame_time - dec.slot_time[0] - dec.slot_time[1]) / total);
        }
        let mut best: Option<(Decision, f64)> = None;
        let mut best_value = value;
        let mut step: f64 = 1.0;
        for _ in 0..60 {
            let at_limit = step >= limit;
            let s = step.min(limit);
            let mut base = *dec;
            for k in 0..2 {
                base.slot_time[k] = (dec.slot_time[k] + s * d[k]).max(0.0);
                if base.slot_time[k] < SLOT_EPS {
                    base.slot_time[k] = 0.0;
                }
            }
            match self.block_a(&base, y, eta) {
                Some((cand, v)) if v > best_value && self.admissible(&cand) => {
                    best = Some((cand, v));
                    best_value = v;
                }
                _ => break,
            }
            if at_limit {
                break;
            }
            step *= 2.0;
        }
        best
    }

    /// Line search along this pass's move of powers, reflected powers and
    /// frequencies with the slot times held, scored at tight auxiliaries. The
    /// quadratic-transform minorizer makes progress slowly when interference and
    /// backscatter gains nearly cancel; the linear constraints stay satisfied
    /// along such a move.
    fn power_line_search(
        &self,
        dec: &Decision,
        from: &Decision,
        eta: f64,
        value: f64,
    ) -> Option<(Decision, f64)> {
        let q = |d: &Decision| [d.backscatter_power(0), d.backscatter_power(1)];
        let (q1, q0) = (q(dec), q(from));
        let dp = [0, 1].map(|k| dec.transmit_power[k] - from.transmit_power[k]);
        let dq = [0, 1].map(|k| q1[k] - q0[k]);
        let df = [0, 1].map(|k| dec.cpu_freq[k] - from.cpu_freq[k]);
        if dp == [0.0; 2] && dq == [0.0; 2] && df == [0.0; 2] {
            return None;
        }
        let mut best: Option<(Decision, f64)> = None;
        let mut best_value = value;
        let mut step = 1.0;
        for _ in 0..60 {
            let mut cand = *dec;
            let mut valid = true;
            for k in 0..2 {
                cand.transmit_power[k] = dec.transmit_power[k] + step * dp[k];
                cand.cpu_freq[k] = dec.cpu_freq[k] + step * df[k];
                valid &= cand.transmit_power[k] >= 0.0 && cand.cpu_freq[k] >= 0.0;
            }
            for k in 0..2 {
                let incident = cand.transmit_power[other(k)];
                let reflected = q1[k] + step * dq[k];
                match recover_alpha(reflected.max(0.0), incident) {
                    Ok(a) if reflected >= 0.0 => cand.reflection_coeff[k] = a,
                    _ => valid = false,
                }
            }
            if !valid {
                break;
            }
            let v = self.objective(&cand, tight_y(&cand, self.ch, self.sys), eta);
            if v > best_value && self.admissible(&cand) {
                best = Some((cand, v));
                best_value = v;
                step *= 2.0;
            } else {
                break;
            }
        }
        best
    }

    /// Best point over evenly spaced splits of the frame, each refined by
    /// alternating the auxiliary and power blocks with the slots held. A split may
    /// close a slot or reopen one the alternating loop has closed, which the slot
    /// LP cannot do once the slot's power is zero. Values are exact (tight
    /// auxiliaries).
    fn slot_scan(&mut self, dec: &Decision, eta: f64) -> Option<(Decision, f64)> {
        let frame = self.sys.frame_time;
        let mut best: Option<(Decision, f64)> = None;
        for i in 0..=SCAN_POINTS {
            let x = i as f64 / SCAN_POINTS as f64;
            let mut start = *dec;
            start.slot_time = [x * frame, (1.0 - x) * frame];
            for k in 0..2 {
                let j = other(k);
                if start.slot_time[k] < SLOT_EPS {
                    start.slot_time[k] = 0.0;
                    start.transmit_power[k] = 0.0;
                    start.reflection_coeff[j] = 0.0;
                } else if start.transmit_power[k] <= 0.0 {
                    let u = &self.sys.users[k];
                    start.transmit_power[k] =
                        2.0 * u.sinr_threshold * self.sys.noise_power / self.ch.gain_user_ap[k];
                }
            }
            // Each piece separately: the reflecting pieces can hold the power up
            // through the harvesting constraint, so greedy piece switching stalls.
            for piece in self.restriction.pieces() {
                let mut d = start;
                let mut y = tight_y(&d, self.ch, self.sys);
                let mut last = f64::NEG_INFINITY;
                for _ in 0..SCAN_REFINE {
                    let Some((cand, _)) = self.block_a_pieces(&d, y, eta, &[piece]) else {
                        break;
                    };
                    d = cand;
                    y = tight_y(&d, self.ch, self.sys);
                    let v = self.objective(&d, y, eta);
                    if self.admissible(&d) && best.as_ref().is_none_or(|(_, b)| v > *b) {
                        best = Some((d, v));
                    }
                    if v - last <= self.cfg.inner_tol * v.abs() {
                        break;
                    }
                    last = v;
                }
            }
        }
        best
    }

    /// Alternating loop for fixed `eta`, starting from `start`. Every block result
    /// is accepted only if it raises the surrogate objective and stays feasible.
    fn run(&mut self, eta: f64, start: &Decision) -> Decision {
        let outer = self.inner_iterations.len() + 1;
        let mut dec = *start;
        let mut y = tight_y(&dec, self.ch, self.sys);
        let mut value = self.objective(&dec, y, eta);
        let mut iterations = 0;
        for iteration in 1..=self.cfg.max_inner {
            iterations = iteration;
            let before = value;
            let slots_before = dec.slot_time;
            let start_of_pass = dec;
            let record = |this: &mut Self, block, value, accepted| {
                this.trace.push(InnerStep {
                    outer,
                    iteration,
                    block,
                    eta,
                    objective: value,
                    accepted,
                });
            };

            let y_new = tight_y(&dec, self.ch, self.sys);
            let v = self.objective(&dec, y_new, eta);
            let accepted = v >= value;
            if accepted {
                y = y_new;
                value = v;
            }
            record(self, Block::Auxiliary, value, accepted);

            let mut accepted = false;
            if let Some((cand, v)) = self.block_a(&dec, y, eta) {
                if v > value && self.admissible(&cand) {
                    dec = cand;
                    value = v;
                    accepted = true;
                }
            }
            record(self, Block::PowerReflectionFrequency, value, accepted);

            let mut accepted = false;
            let slots = match solve_subproblem_b(self.sys, self.ch, &dec, y, eta) {
                Err(Error::SurrogateDomain { .. }) => {
                    // stale auxiliaries: refresh them and retry once
                    let y_new = tight_y(&dec, self.ch, self.sys);
                    let v = self.objective(&dec, y_new, eta);
                    if v >= value {
                        y = y_new;
                        value = v;
                    }
                    solve_subproblem_b(self.sys, self.ch, &dec, y, eta)
                }
                other => other,
            };
            match slots {
                Ok(t) => {
                    let mut cand = dec;
                    cand.slot_time = t;
                    for k in 0..2 {
                        if t[k] < SLOT_EPS {
                            // an unused slot carries no power and no reflection into it
                            cand.slot_time[k] = 0.0;
                        }
                    }
                    let v = self.objective(&cand, y, eta);
                    if v > value && self.admissible(&cand) {
                        dec = cand;
                        value = v;
                        accepted = true;
                    }
                }
                Err(e) => self.warnings.push(format!("slot-time block skipped: {e}")),
            }
            record(self, Block::SlotTimes, value, accepted);

            if accepted && self.cfg.extrapolate {
                let mut accepted = false;
                if let Some((cand, v)) = self.extrapolate(&dec, slots_before, y, eta, value) {
                    dec = cand;
                    value = v;
                    accepted = true;
                }
                record(self, Block::Extrapolation, value, accepted);
            }
            if self.cfg.extrapolate {
                let mut accepted = false;
                if let Some((cand, v)) = self.power_line_search(&dec, &start_of_pass, eta, value) {
                    dec = cand;
                    value = v;
                    y = tight_y(&dec, self.ch, self.sys);
                    accepted = true;
                }
                record(self, Block::Extrapolation, value, accepted);
            }

            // Gains far below the Dinkelbach tolerance cannot change the outcome.
            let energy = compute_metrics(&dec, self.ch, self.sys)
                .map(|m| m.total_energy())
                .unwrap_or(0.0);
            let floor = 0.1 * self.cfg.dinkelbach_tol * energy.max(1.0);
            let threshold = (self.cfg.inner_tol * value.abs()).max(floor);
            if value - before <= threshold {
                if self.scans_left == 0 || !self.restriction.offloading {
                    break;
                }
                self.scans_left -= 1;
                let mut accepted = false;
                if let Some((cand, v)) = self.slot_scan(&dec, eta) {
                    if v > value + threshold {
                        dec = cand;
                        value = v;
                        y = tight_y(&dec, self.ch, self.sys);
                        accepted = true;
                    }
                }
                record(self, Block::SlotScan, value, accepted);
                if !accepted {
                    break;
                }
            }
        }
        self.inner_iterations.push(iterations);
        dec
    }
}

/// Solve the CE maximization for one channel under `scheme`.
///
/// With `cfg.multi_start` the proposed scheme also starts from every benchmark's
/// solution, and the full-offloading scheme also from a non-reflecting start; the
/// best feasible result is kept.
pub fn alternating_solve(
    sys: &SystemParams,
    ch: &ChannelRealization,
    scheme: Scheme,
    cfg: &SolverConfig,
) -> SolveReport {
    let mut extra = Vec::new();
    if scheme == Scheme::Proposed && cfg.multi_start {
        for bench in BENCHMARKS {
            let report = alternating_solve(sys, ch, bench, cfg);
            if report.feasible {
                extra.push(report.decision);
            }
        }
    }
    solve_with_starts(sys, ch, scheme, cfg, &extra)
}

const BENCHMARKS: [Scheme; 3] = [Scheme::NonReciprocal, Scheme::FullOffloading, Scheme::FullLocal];

/// Solve several schemes on one channel, in the order given. Benchmark solutions
/// are computed once and reused as the proposed scheme's extra starts, so the
/// result equals calling [`alternating_solve`] per scheme.
pub fn solve_schemes(
    sys: &SystemParams,
    ch: &ChannelRealization,
    schemes: &[Scheme],
    cfg: &SolverConfig,
) -> Vec<SolveReport> {
    solve_schemes_from(sys, ch, schemes, cfg, &[])
}

/// [`solve_schemes`] warm-started from earlier reports on the same channel, for
/// example at a neighbouring sweep point. A scheme whose earlier decision is still
/// feasible starts from it instead of the constructed starting point, so its CE
/// cannot fall below the earlier one.
pub fn solve_schemes_from(
    sys: &SystemParams,
    ch: &ChannelRealization,
    schemes: &[Scheme],
    cfg: &SolverConfig,
    warm: &[SolveReport],
) -> Vec<SolveReport> {
    let warm_start = |scheme: Scheme| {
        warm.iter()
            .find(|r| r.scheme == scheme && r.feasible)
            .map(|r| r.decision)
            .filter(|d| check_constraints(d, ch, sys).all_within(cfg.feas_tol))
    };
    let solve = |scheme: Scheme, extra: &[Decision]| match warm_start(scheme) {
        Some(d) => {
            let mut starts = vec![d];
            starts.extend_from_slice(extra);
            best_of(sys, ch, scheme, cfg, &starts)
        }
        None => solve_with_starts(sys, ch, scheme, cfg, extra),
    };
    let needs_bench = cfg.multi_start && schemes.contains(&Scheme::Proposed);
    let mut bench: Vec<(Scheme, SolveReport)> = Vec::new();
    for b in BENCHMARKS {
        if needs_bench || schemes.contains(&b) {
            bench.push((b, solve(b, &[])));
        }
    }
    schemes
        .iter()
        .map(|&scheme| {
            if let Some((_, r)) = bench.iter().find(|(b, _)| *b == scheme) {
                return r.clone();
            }
            let extra: Vec<Decision> = if cfg.multi_start {
                bench
                    .iter()
                    .filter(|(_, r)| r.feasible)
                    .map(|(_, r)| r.decision)
                    .collect()
            } else {
                Vec::new()
            };
            solve(scheme, &extra)
        })
        .collect()
}

fn solve_with_starts(
    sys: &SystemParams,
    ch: &ChannelRealization,
    scheme: Scheme,
    cfg: &SolverConfig,
    extra: &[Decision],
) -> SolveReport {
    let mut starts = Vec::new();
    match initialize_feasible(sys, ch, scheme) {
        Ok(init) => {
            starts.push(init);
            if cfg.multi_start && scheme == Scheme::FullOffloading {
                // the reflecting start can lead into a worse local optimum
                if let Ok(d) = initialize_with(sys, ch, scheme, &[false]) {
                    if d != init {
                        starts.push(d);
                    }
                }
            }
        }
        Err(e) if extra.is_empty() => return SolveReport::infeasible(scheme, e.to_string()),
        Err(_) => {}
    }
    starts.extend_from_slice(extra);
    best_of(sys, ch, scheme, cfg, &starts)
}

/// Solve from every start and keep the best feasible report (the first on ties).
fn best_of(
    sys: &SystemParams,
    ch: &ChannelRealization,
    scheme: Scheme,
    cfg: &SolverConfig,
    starts: &[Decision],
) -> SolveReport {
    let mut best: Option<SolveReport> = None;
    for &start in starts {
        let report = solve_from(sys, ch, scheme, cfg, start);
        let better = match &best {
            None => true,
            Some(b) => report.feasible && (!b.feasible || report.ce > b.ce),
        };
        if better {
            best = Some(report);
        }
    }
    best.expect("at least one start")
}

/// Dinkelbach plus alternating loop from a given feasible decision.
pub fn solve_from(
    sys: &SystemParams,
    ch: &ChannelRealization,
    scheme: Scheme,
    cfg: &SolverConfig,
    start: Decision,
) -> SolveReport {
    let restriction = apply_scheme(scheme);
    let start = restriction.restrict(&start);
    let mut alt = Alternation {
        sys,
        ch,
        restriction,
        cfg,
        trace: Vec::new(),
        inner_iterations: Vec::new(),
        warnings: Vec::new(),
        scans_left: MAX_SCANS,
    };
    let outcome = dinkelbach_solve(
        start,
        sys,
        ch,
        |eta, current| Ok(alt.run(eta, current)),
        cfg.dinkelbach_tol,
        cfg.max_outer,
    );
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => return SolveReport::infeasible(scheme, e.to_string()),
    };
    let constraints = check_constraints(&outcome.decision, ch, sys);
    let feasible = constraints.all_within(cfg.feas_tol);
    let mut warnings = alt.warnings;
    if !outcome.converged {
        warnings.push(format!(
            "Dinkelbach loop stopped after {} outer iterations without converging",
            outcome.outer_iterations()
        ));
    }
    SolveReport {
        scheme,
        feasible,
        decision: outcome.decision,
        metrics: Some(outcome.metrics),
        ce: if feasible { outcome.eta } else { 0.0 },
        outer_iterations: outcome.outer_iterations(),
        inner_iterations: alt.inner_iterations,
        dinkelbach: outcome.trace,
        converged: outcome.converged,
        constraints: Some(constraints),
        trace: alt.trace,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn channel() -> ChannelRealization {
        ChannelRealization::new([1e-4, 2e-4], 1e-2).unwrap()
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("hybrid".parse::<Scheme>().is_err());
    }

    #[test]
    fn full_local_closed_form() {
        let sys = SystemParams::default();
        let report = alternating_solve(&sys, &channel(), Scheme::FullLocal, &SolverConfig::default());
        assert!(report.feasible);
        assert!((report.ce / 2.5e6 - 1.0).abs() < 1e-6, "{}", report.ce);
        for f in report.decision.cpu_freq {
            assert!((f / 2e8 - 1.0).abs() < 1e-6);
        }
        assert!(report.inner_iterations[0] <= 2);
    }

    #[test]
    fn full_local_infeasible_above_budget_bound() {
        // budget-limited frequency (1e26)^(1/3) caps local bits near 4.64e5
        let sys = SystemParams::default().with_users(|u| u.min_bits = 4.7e5);
        assert!(initialize_feasible(&sys, &channel(), Scheme::FullLocal).is_err());
        let sys = SystemParams::default().with_users(|u| u.min_bits = 4.6e5);
        assert!(initialize_feasible(&sys, &channel(), Scheme::FullLocal).is_ok());
    }

    #[test]
    fn zero_requirement_is_trivially_feasible() {
        let sys = SystemParams::default().with_users(|u| u.min_bits = 0.0);
        for scheme in [Scheme::Proposed, Scheme::FullOffloading, Scheme::NonReciprocal] {
            let dec = initialize_feasible(&sys, &channel(), scheme).unwrap();
            assert!(check_constraints(&dec, &channel(), &sys).all_satisfied());
        }
    }

    #[test]
    fn restrictions_fix_variables() {
        let dec = Decision {
            transmit_power: [0.1, 0.2],
            slot_time: [0.5, 0.5],
            reflection_coeff: [0.3, 0.4],
            cpu_freq: [1e8, 1e8],
        };
        let r = apply_scheme(Scheme::NonReciprocal).restrict(&dec);
        assert_eq!(r.reflection_coeff, [0.0; 2]);
        let r = apply_scheme(Scheme::FullOffloading).restrict(&dec);
        assert_eq!(r.cpu_freq, [0.0; 2]);
        let r = apply_scheme(Scheme::FullLocal).restrict(&dec);
        assert_eq!((r.transmit_power, r.slot_time), ([0.0; 2], [0.0; 2]));
        assert_eq!(apply_scheme(Scheme::Proposed).restrict(&dec), dec);
    }

    #[test]
    fn proposed_solve_is_feasible_and_monotone() {
        let sys = SystemParams::default();
        let report = alternating_solve(&sys, &channel(), Scheme::Proposed, &SolverConfig::default());
        assert!(report.feasible, "{:?}", report.warnings);
        assert!(report.converged);
        for w in report.trace.windows(2) {
            if w[0].outer == w[1].outer {
                assert!(w[1].objective >= w[0].objective - 1e-9);
            }
        }
        for w in report.dinkelbach.windows(2) {
            assert!(w[1].eta >= w[0].eta);
        }
    }
}
