//! Exact maximization of the CE ratio over a finite grid of decisions.
//!
//! For fixed slot times every slot contributes rates and power that do not depend
//! on the other slot, and each user's best grid frequency follows from its bit
//! deficit and energy left. The search runs Dinkelbach's method over the finite
//! set, which terminates at the grid optimum, and prunes slot pairs by an upper
//! bound. [`grid_search_bruteforce`] enumerates the literal Cartesian product and
//! exists to cross-check the decomposition on tiny grids.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    check_constraints, compute_metrics, other, ChannelRealization, Decision, Metrics,
    SystemParams,
};
use crate::optimizer::{apply_scheme, Restriction, Scheme};

/// Candidate values per variable. Frequencies and slot times are fractions of the
/// user's `f_max` and of the frame time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Transmit powers (W), ascending, including 0.
    pub power: Vec<f64>,
    /// Reflection coefficients, ascending, from 0 to 1.
    pub reflection: Vec<f64>,
    /// CPU frequency fractions, ascending, from 0 to 1.
    pub frequency: Vec<f64>,
    /// Slot-time fractions, ascending, from 0 to 1. The second slot takes every
    /// value that fits in what the first leaves.
    pub slot: Vec<f64>,
}

fn linspace(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

impl GridSpec {
    /// `per_decade` log-spaced powers over `[p_min, p_max]` plus zero, and `n_alpha`,
    /// `n_freq`, `n_slot` evenly spaced points over the unit interval.
    pub fn uniform(
        per_decade: usize,
        p_min: f64,
        p_max: f64,
        n_alpha: usize,
        n_freq: usize,
        n_slot: usize,
    ) -> Self {
        let mut power = vec![0.0];
        let decades = (p_max / p_min).log10();
        let steps = (decades * per_decade as f64).round().max(0.0) as usize;
        for i in 0..=steps {
            let frac = if steps == 0 { 0.0 } else { i as f64 / steps as f64 };
            power.push(p_min * (p_max / p_min).powf(frac));
        }
        if let Some(last) = power.last_mut() {
            *last = p_max;
        }
        Self {
            power,
            reflection: linspace(n_alpha),
            frequency: linspace(n_freq),
            slot: linspace(n_slot),
        }
    }

    /// Every list must be non-empty, ascending and contain its bounds.
    pub fn validate(&self) -> Result<()> {
        let lists = [
            ("power", &self.power, None),
            ("reflection", &self.reflection, Some(1.0)),
            ("frequency", &self.frequency, Some(1.0)),
            ("slot", &self.slot, Some(1.0)),
        ];
        for (name, v, upper) in lists {
            if v.is_empty() {
                return Err(Error::config(format!("grid.{name}"), "must not be empty"));
            }
            if !v.windows(2).all(|w| w[0] < w[1]) || !v.iter().all(|x| x.is_finite()) {
                return Err(Error::config(
                    format!("grid.{name}"),
                    "must be finite and strictly ascending",
                ));
            }
            if v[0] != 0.0 {
                return Err(Error::config(format!("grid.{name}"), "must start at 0"));
            }
            if let Some(u) = upper {
                if v[v.len() - 1] != u {
                    return Err(Error::config(format!("grid.{name}"), "must end at 1"));
                }
            }
        }
        Ok(())
    }

    /// Number of points of the literal Cartesian product (slot pairs that fit only).
    pub fn cartesian_size(&self) -> f64 {
        let slots = self.slot_pairs().len() as f64;
        let per_user = (self.power.len() * self.reflection.len() * self.frequency.len()) as f64;
        slots * per_user * per_user
    }

    fn slot_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, &a) in self.slot.iter().enumerate() {
            for (j, &b) in self.slot.iter().enumerate() {
                if a + b <= 1.0 + 1e-12 {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::uniform(16, 1e-6, 1.0, 21, 21, 21)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSolution {
    pub decision: Decision,
    pub metrics: Metrics,
    pub ce: f64,
    /// Largest CE change between the optimum and a grid neighbour (one index step
    /// in one variable, feasible or not).
    pub resolution_bound: f64,
    pub dinkelbach_iterations: usize,
    /// Slot pairs scored over all Dinkelbach steps.
    pub evaluations: u64,
}

/// One choice for slot `k`: its owner's power and the partner's reflection.
#[derive(Debug, Clone, Copy)]
struct SlotChoice {
    p: f64,
    alpha: f64,
    /// Owner's active rate (bit/s).
    active: f64,
    /// Partner's backscatter rate (bit/s).
    backscatter: f64,
    /// Owner's power draw (W).
    power: f64,
}

fn slot_choices(
    sys: &SystemParams,
    ch: &ChannelRealization,
    grid: &GridSpec,
    restriction: &Restriction,
    k: usize,
) -> Vec<SlotChoice> {
    let j = other(k);
    let mut out = Vec::new();
    if !restriction.offloading {
        return out;
    }
    let alphas: &[f64] = if restriction.backscatter {
        &grid.reflection
    } else {
        &grid.reflection[..1]
    };
    let (uk, uj) = (&sys.users[k], &sys.users[j]);
    let sigma2 = sys.noise_power;
    let g = ch.gain_interuser;
    for &p in &grid.power {
        for &alpha in alphas {
            let sinr = p * ch.gain_user_ap[k] / (alpha * p * ch.gain_user_ap[j] * g + sigma2);
            if !(sinr >= uk.sinr_threshold) {
                continue;
            }
            if alpha > 0.0 && sys.eh_coeff * (1.0 - alpha) * p * g < uj.circuit_power_backscatter {
                continue;
            }
            out.push(SlotChoice {
                p,
                alpha,
                active: sys.bandwidth * (1.0 + sinr).log2(),
                backscatter: sys.bandwidth * (1.0 + alpha * p * ch.gain_user_ap[j] * g / sigma2).log2(),
                power: p + uk.circuit_power_active,
            });
        }
    }
    out
}

/// Per-user local-computing table over the frequency grid.
struct LocalTable {
    freq: Vec<f64>,
    bits: Vec<f64>,
    energy: Vec<f64>,
}

impl LocalTable {
    fn new(sys: &SystemParams, grid: &GridSpec, restriction: &Restriction, k: usize) -> Self {
        let u = &sys.users[k];
        let t = sys.frame_time;
        let fracs: &[f64] = if restriction.local_computing {
            &grid.frequency
        } else {
            &grid.frequency[..1]
        };
        let freq: Vec<f64> = fracs.iter().map(|x| x * u.f_max).collect();
        Self {
            bits: freq.iter().map(|f| t * f / u.cpu_cycles_per_bit).collect(),
            energy: freq.iter().map(|f| t * u.capacitance_coeff * f * f * f).collect(),
            freq,
        }
    }

    /// Best index within the feasible range for a bit deficit and an energy
    /// allowance, given the unconstrained best `peak`.
    fn pick(&self, deficit: f64, allowance: f64, peak: usize) -> Option<usize> {
        let lo = self.bits.partition_point(|&b| b < deficit);
        let hi = self.energy.partition_point(|&e| e <= allowance);
        if lo >= hi {
            return None;
        }
        Some(peak.clamp(lo, hi - 1))
    }

    /// Index maximizing `bits - eta * energy` (smallest on ties). The values are
    /// concave in the frequency, so clamping this index gives the constrained best.
    fn peak(&self, eta: f64) -> usize {
        let mut best = 0;
        for i in 1..self.freq.len() {
            if self.bits[i] - eta * self.energy[i] > self.bits[best] - eta * self.energy[best] {
                best = i;
            }
        }
        best
    }
}

fn lex_cmp(a: &Decision, b: &Decision) -> Ordering {
    let (a, b) = (a.as_array(), b.as_array());
    for (x, y) in a.iter().zip(b.iter()) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

struct Search<'a> {
    sys: &'a SystemParams,
    ch: &'a ChannelRealization,
    grid: &'a GridSpec,
    choices: [Vec<SlotChoice>; 2],
    local: [LocalTable; 2],
    evaluations: u64,
}

struct Best {
    value: f64,
    decision: Decision,
    bits: f64,
    energy: f64,
}

impl Search<'_> {
    fn zero_choice(&self, k: usize) -> SlotChoice {
        SlotChoice {
            p: 0.0,
            alpha: 0.0,
            active: 0.0,
            backscatter: 0.0,
            power: self.sys.users[k].circuit_power_active,
        }
    }

    /// Maximize `bits - eta * energy` over the grid.
    fn maximize(&mut self, eta: f64) -> Option<Best> {
        let (sys, t_frame) = (self.sys, self.sys.frame_time);
        let peaks = [self.local[0].peak(eta), self.local[1].peak(eta)];
        let local_max: f64 = (0..2)
            .map(|k| self.local[k].bits[peaks[k]] - eta * self.local[k].energy[peaks[k]])
            .sum();

        // Per-slot values in descending order for every slot length.
        let value_of = |c: &SlotChoice| c.active + c.backscatter - eta * c.power;
        let mut sorted: [Vec<SlotChoice>; 2] = [self.choices[0].clone(), self.choices[1].clone()];
        for list in &mut sorted {
            list.sort_by(|a, b| value_of(b).total_cmp(&value_of(a)));
        }
        let closed = [[self.zero_choice(0)], [self.zero_choice(1)]];

        let mut combos: Vec<(f64, usize, usize)> = Vec::new();
        for (i, j) in self.grid.slot_pairs() {
            let t = [self.grid.slot[i] * t_frame, self.grid.slot[j] * t_frame];
            let mut bound = local_max;
            for k in 0..2 {
                if t[k] > 0.0 {
                    match sorted[k].first() {
                        Some(c) => bound += t[k] * value_of(c),
                        None => {
                            bound = f64::NEG_INFINITY;
                            break;
                        }
                    }
                }
            }
            if bound > f64::NEG_INFINITY {
                combos.push((bound, i, j));
            }
        }
        combos.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));

        let mut best: Option<Best> = None;
        for (bound, i, j) in combos {
            if best.as_ref().is_some_and(|b| bound < b.value) {
                break;
            }
            let t = [self.grid.slot[i] * t_frame, self.grid.slot[j] * t_frame];
            let lists: [&[SlotChoice]; 2] = [0, 1].map(|k| {
                if t[k] > 0.0 {
                    &sorted[k][..]
                } else {
                    &closed[k][..]
                }
            });
            let top1 = t[1] * value_of(&lists[1][0]) * f64::from(t[1] > 0.0);
            for c0 in lists[0] {
                let v0 = if t[0] > 0.0 { t[0] * value_of(c0) } else { 0.0 };
                if best.as_ref().is_some_and(|b| v0 + top1 + local_max < b.value) {
                    break;
                }
                for c1 in lists[1] {
                    let v1 = if t[1] > 0.0 { t[1] * value_of(c1) } else { 0.0 };
                    if best.as_ref().is_some_and(|b| v0 + v1 + local_max < b.value) {
                        break;
                    }
                    self.evaluations += 1;
                    let c = [c0, c1];
                    let mut bits = [0.0; 2];
                    let mut energy = [0.0; 2];
                    for k in 0..2 {
                        let j = other(k);
                        bits[k] = t[k] * c[k].active + t[j] * c[j].backscatter;
                        energy[k] = t[k] * c[k].power;
                    }
                    let mut f = [0usize; 2];
                    let mut ok = true;
                    for k in 0..2 {
                        let u = &sys.users[k];
                        match self.local[k].pick(u.min_bits - bits[k], u.energy_budget - energy[k], peaks[k]) {
                            Some(i) => f[k] = i,
                            None => ok = false,
                        }
                    }
                    if !ok {
                        continue;
                    }
                    let total_bits: f64 = (0..2).map(|k| bits[k] + self.local[k].bits[f[k]]).sum();
                    let total_energy: f64 =
                        (0..2).map(|k| energy[k] + self.local[k].energy[f[k]]).sum();
                    let value = total_bits - eta * total_energy;
                    if best.as_ref().is_some_and(|b| value < b.value) {
                        continue;
                    }
                    let decision = Decision {
                        transmit_power: [c0.p, c1.p],
                        slot_time: t,
                        // slot 0 carries user 1's reflection and vice versa
                        reflection_coeff: [c1.alpha, c0.alpha],
                        cpu_freq: [self.local[0].freq[f[0]], self.local[1].freq[f[1]]],
                    };
                    if let Some(b) = &best {
                        if value == b.value && lex_cmp(&decision, &b.decision) != Ordering::Less {
                            continue;
                        }
                    }
                    if !check_constraints(&decision, self.ch, sys).all_satisfied() {
                        continue;
                    }
                    best = Some(Best {
                        value,
                        decision,
                        bits: total_bits,
                        energy: total_energy,
                    });
                }
            }
        }
        best
    }
}

/// Largest CE change from `dec` to a neighbour one grid index away in one variable.
fn resolution_bound(
    sys: &SystemParams,
    ch: &ChannelRealization,
    grid: &GridSpec,
    restriction: &Restriction,
    dec: &Decision,
    ce: f64,
) -> f64 {
    let neighbours = |list: &[f64], x: f64, scale: f64| -> Vec<f64> {
        let i = list
            .iter()
            .position(|&v| (v * scale - x).abs() <= 1e-12 * scale.max(x.abs()))
            .unwrap_or(0);
        let mut out = Vec::new();
        if i > 0 {
            out.push(list[i - 1] * scale);
        }
        if i + 1 < list.len() {
            out.push(list[i + 1] * scale);
        }
        out
    };
    let mut moves: Vec<Decision> = Vec::new();
    for k in 0..2 {
        if restriction.offloading {
            for p in neighbours(&grid.power, dec.transmit_power[k], 1.0) {
                let mut d = *dec;
                d.transmit_power[k] = p;
                moves.push(d);
            }
            for t in neighbours(&grid.slot, dec.slot_time[k], sys.frame_time) {
                let mut d = *dec;
                d.slot_time[k] = t;
                moves.push(d);
            }
        }
        if restriction.offloading && restriction.backscatter {
            for a in neighbours(&grid.reflection, dec.reflection_coeff[k], 1.0) {
                let mut d = *dec;
                d.reflection_coeff[k] = a;
                moves.push(d);
            }
        }
        if restriction.local_computing {
            let fmax = sys.users[k].f_max;
            for f in neighbours(&grid.frequency, dec.cpu_freq[k], fmax) {
                let mut d = *dec;
                d.cpu_freq[k] = f;
                moves.push(d);
            }
        }
    }
    moves
        .iter()
        .filter_map(|d| compute_metrics(d, ch, sys).ok())
        .map(|m| (m.ce - ce).abs())
        .fold(0.0, f64::max)
}

/// Best-CE feasible grid decision under `scheme`.
pub fn grid_search_solve(
    sys: &SystemParams,
    ch: &ChannelRealization,
    scheme: Scheme,
    grid: &GridSpec,
) -> Result<GridSolution> {
    grid.validate()?;
    let restriction = apply_scheme(scheme);
    let mut search = Search {
        sys,
        ch,
        grid,
        choices: [0, 1].map(|k| slot_choices(sys, ch, grid, &restriction, k)),
        local: [0, 1].map(|k| LocalTable::new(sys, grid, &restriction, k)),
        evaluations: 0,
    };
    let mut eta = 0.0;
    let mut iterations = 0;
    let mut incumbent: Option<Best> = None;
    loop {
        iterations += 1;
        let Some(best) = search.maximize(eta) else {
            break;
        };
        if best.energy <= 0.0 {
            break;
        }
        let ratio = best.bits / best.energy;
        // On a finite set each step strictly raises eta until the optimum repeats.
        let done = ratio <= eta * (1.0 + 1e-13);
        if !done || incumbent.is_none() {
            eta = ratio;
            incumbent = Some(best);
        }
        if done || iterations >= 100 {
            break;
        }
    }
    let best = incumbent.ok_or_else(|| Error::Infeasible("no feasible grid point".into()))?;
    let metrics = compute_metrics(&best.decision, ch, sys)?;
    let resolution_bound =
        resolution_bound(sys, ch, grid, &restriction, &best.decision, metrics.ce);
    Ok(GridSolution {
        decision: best.decision,
        ce: metrics.ce,
        metrics,
        resolution_bound,
        dinkelbach_iterations: iterations,
        evaluations: search.evaluations,
    })
}

/// Literal enumeration of the Cartesian product with [`compute_metrics`] and
/// [`check_constraints`]. Cost is [`GridSpec::cartesian_size`]; meant for tiny grids.
pub fn grid_search_bruteforce(
    sys: &SystemParams,
    ch: &ChannelRealization,
    scheme: Scheme,
    grid: &GridSpec,
) -> Result<GridSolution> {
    grid.validate()?;
    let restriction = apply_scheme(scheme);
    let pick = |list: &[f64], free: bool| -> Vec<f64> {
        if free {
            list.to_vec()
        } else {
            vec![0.0]
        }
    };
    let powers = pick(&grid.power, restriction.offloading);
    let alphas = pick(&grid.reflection, restriction.offloading && restriction.backscatter);
    let freqs = pick(&grid.frequency, restriction.local_computing);
    let slots: Vec<(f64, f64)> = if restriction.offloading {
        grid.slot_pairs()
            .into_iter()
            .map(|(i, j)| (grid.slot[i] * sys.frame_time, grid.slot[j] * sys.frame_time))
            .collect()
    } else {
        vec![(0.0, 0.0)]
    };
    let mut best: Option<(Decision, f64)> = None;
    let mut evaluations = 0u64;
    for &(t0, t1) in &slots {
        for &p0 in &powers {
            for &p1 in &powers {
                for &a0 in &alphas {
                    for &a1 in &alphas {
                        for &f0 in &freqs {
                            for &f1 in &freqs {
                                evaluations += 1;
                                let d = Decision {
                                    transmit_power: [p0, p1],
                                    slot_time: [t0, t1],
                                    reflection_coeff: [a0, a1],
                                    cpu_freq: [f0 * sys.users[0].f_max, f1 * sys.users[1].f_max],
                                };
                                if !check_constraints(&d, ch, sys).all_satisfied() {
                                    continue;
                                }
                                let Ok(m) = compute_metrics(&d, ch, sys) else {
                                    continue;
                                };
                                let better = match &best {
                                    None => true,
                                    Some((bd, bce)) => {
                                        m.ce > *bce || (m.ce == *bce && lex_cmp(&d, bd) == Ordering::Less)
                                    }
                                };
                                if better {
                                    best = Some((d, m.ce));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let (decision, _) = best.ok_or_else(|| Error::Infeasible("no feasible grid point".into()))?;
    let metrics = compute_metrics(&decision, ch, sys)?;
    let resolution_bound = resolution_bound(sys, ch, grid, &restriction, &decision, metrics.ce);
    Ok(GridSolution {
        decision,
        ce: metrics.ce,
        metrics,
        resolution_bound,
        dinkelbach_iterations: 0,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{draw_channel, ChannelGenConfig};

    fn tiny() -> GridSpec {
        GridSpec::uniform(1, 1e-3, 1e-1, 3, 3, 3)
    }

    #[test]
    fn default_grid_shape() {
        let g = GridSpec::default();
        assert_eq!(g.power.len(), 98);
        assert_eq!(g.power[0], 0.0);
        assert!((g.power[1] - 1e-6).abs() < 1e-18);
        assert_eq!(*g.power.last().unwrap(), 1.0);
        assert_eq!(g.reflection.len(), 21);
        assert_eq!(g.frequency.len(), 21);
        assert_eq!(g.slot.len(), 21);
        g.validate().unwrap();
    }

    #[test]
    fn bad_grids_are_rejected() {
        let mut g = tiny();
        g.reflection.pop();
        assert!(g.validate().is_err());
        let mut g = tiny();
        g.power.clear();
        assert!(g.validate().is_err());
    }

    #[test]
    fn full_local_grid_hits_the_closed_form() {
        let sys = SystemParams::default();
        let ch = draw_channel(0, &ChannelGenConfig::default());
        let s = grid_search_solve(&sys, &ch, Scheme::FullLocal, &GridSpec::default()).unwrap();
        assert_eq!(s.decision.cpu_freq, [2e8, 2e8]);
        assert!((s.ce - 2.5e6).abs() < 1e-6 * 2.5e6, "{}", s.ce);
    }

    #[test]
    fn huge_requirement_is_infeasible() {
        let sys = SystemParams::default().with_users(|u| u.min_bits = 1e7);
        let ch = draw_channel(0, &ChannelGenConfig::default());
        for scheme in Scheme::ALL {
            let r = grid_search_solve(&sys, &ch, scheme, &tiny());
            assert!(matches!(r, Err(Error::Infeasible(_))), "{scheme}");
        }
    }

    #[test]
    fn decomposition_matches_literal_enumeration() {
        let sys = SystemParams::default();
        let grid = tiny();
        for seed in 0..4 {
            let ch = draw_channel(seed, &ChannelGenConfig::default());
            for scheme in Scheme::ALL {
                let fast = grid_search_solve(&sys, &ch, scheme, &grid);
                let slow = grid_search_bruteforce(&sys, &ch, scheme, &grid);
                match (fast, slow) {
                    (Ok(a), Ok(b)) => {
                        assert!((a.ce - b.ce).abs() <= 1e-9 * b.ce, "{seed} {scheme} {} {}", a.ce, b.ce);
                    }
                    (Err(_), Err(_)) => {}
                    (a, b) => panic!("{seed} {scheme}: {a:?} vs {b:?}"),
                }
            }
        }
    }
}
