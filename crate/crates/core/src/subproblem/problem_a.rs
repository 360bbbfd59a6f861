use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use super::duals::{power_denominator, primal_f, reflect_denominator, DualKind, DualMultipliers};
use crate::model::{other, ChannelRealization, SystemParams, SLOT_EPS};

/// Power, reflection, frequency and slack-SINR block for fixed slot times,
/// auxiliaries and ratio parameter.
#[derive(Debug, Clone, Copy)]
pub struct SubproblemAInput<'a> {
    pub sys: &'a SystemParams,
    pub ch: &'a ChannelRealization,
    pub slot_time: [f64; 2],
    pub y: [f64; 2],
    pub eta: f64,
    /// Whether user k may reflect during the partner's slot. When off, `q_k = 0`
    /// and the harvesting constraint of user k is dropped.
    pub backscatter: [bool; 2],
    /// When off, `f_k = 0` for both users.
    pub local_computing: bool,
}

/// Primal variables of the block: `q_k` is user k's reflected power `alpha_k p_j`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PrimalA {
    pub p: [f64; 2],
    pub q: [f64; 2],
    pub f: [f64; 2],
    pub gamma_bar: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PrimalVar {
    P,
    Q,
    F,
    GammaBar,
}

impl PrimalVar {
    pub const ALL: [PrimalVar; 4] = [PrimalVar::P, PrimalVar::Q, PrimalVar::F, PrimalVar::GammaBar];
}

impl PrimalA {
    pub fn get(&self, var: PrimalVar, k: usize) -> f64 {
        match var {
            PrimalVar::P => self.p[k],
            PrimalVar::Q => self.q[k],
            PrimalVar::F => self.f[k],
            PrimalVar::GammaBar => self.gamma_bar[k],
        }
    }

    pub fn set(&mut self, var: PrimalVar, k: usize, value: f64) {
        match var {
            PrimalVar::P => self.p[k] = value,
            PrimalVar::Q => self.q[k] = value,
            PrimalVar::F => self.f[k] = value,
            PrimalVar::GammaBar => self.gamma_bar[k] = value,
        }
    }
}

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

impl<'a> SubproblemAInput<'a> {
    /// All pieces enabled: both users may reflect and compute locally.
    pub fn new(
        sys: &'a SystemParams,
        ch: &'a ChannelRealization,
        slot_time: [f64; 2],
        y: [f64; 2],
        eta: f64,
    ) -> Self {
        Self {
            sys,
            ch,
            slot_time,
            y,
            eta,
            backscatter: [true, true],
            local_computing: true,
        }
    }

    pub fn slot_active(&self, k: usize) -> bool {
        self.slot_time[k] >= SLOT_EPS
    }

    /// User k reflects only if enabled and the partner's slot is in use.
    pub fn reflects(&self, k: usize) -> bool {
        self.backscatter[k] && self.slot_active(other(k))
    }

    /// Largest transmit power the budget allows in user k's slot.
    pub fn power_cap(&self, k: usize) -> f64 {
        if !self.slot_active(k) {
            return 0.0;
        }
        let u = &self.sys.users[k];
        (u.energy_budget / self.slot_time[k] - u.circuit_power_active).max(0.0)
    }

    pub fn reflect_cap(&self, k: usize) -> f64 {
        if self.reflects(k) {
            self.power_cap(other(k))
        } else {
            0.0
        }
    }

    pub fn freq_cap(&self, k: usize) -> f64 {
        if self.local_computing {
            self.sys.users[k].f_max
        } else {
            0.0
        }
    }

    /// Largest slack SINR reachable at `p_k = power_cap` without interference.
    pub fn gamma_cap(&self, k: usize) -> f64 {
        if !self.slot_active(k) {
            return 0.0;
        }
        let y = self.y[k];
        (2.0 * y * (self.power_cap(k) * self.ch.gain_user_ap[k]).sqrt()
            - y * y * self.sys.noise_power)
            .max(0.0)
    }

    /// Whether the constraint priced by `kind` exists for user k in this piece.
    pub fn has_constraint(&self, kind: DualKind, k: usize) -> bool {
        match kind {
            DualKind::ReflectCap | DualKind::Harvest => self.reflects(k),
            DualKind::Sinr | DualKind::Surrogate => self.slot_active(k),
            DualKind::MinBits | DualKind::Budget => true,
            DualKind::CpuCap => self.local_computing,
        }
    }

    /// Interference plus noise on user k's active signal.
    fn interference(&self, x: &PrimalA, k: usize) -> f64 {
        let j = other(k);
        x.q[j] * self.ch.gain_user_ap[j] * self.ch.gain_interuser + self.sys.noise_power
    }

    fn backscatter_gain(&self, k: usize) -> f64 {
        self.ch.gain_user_ap[k] * self.ch.gain_interuser / self.sys.noise_power
    }

    /// Bits of user k with the slack SINR in place of the active SINR.
    pub fn bits(&self, x: &PrimalA, k: usize) -> f64 {
        let j = other(k);
        let b = self.sys.bandwidth;
        self.sys.frame_time * x.f[k] / self.sys.users[k].cpu_cycles_per_bit
            + self.slot_time[k] * b * log2_1p(x.gamma_bar[k])
            + self.slot_time[j] * b * log2_1p(x.q[k] * self.backscatter_gain(k))
    }

    pub fn energy(&self, x: &PrimalA, k: usize) -> f64 {
        let u = &self.sys.users[k];
        self.slot_time[k] * (x.p[k] + u.circuit_power_active)
            + self.sys.frame_time * u.capacitance_coeff * x.f[k].powi(3)
    }

    /// `sum bits - eta * sum energy`.
    pub fn objective(&self, x: &PrimalA) -> f64 {
        (0..2)
            .map(|k| self.bits(x, k) - self.eta * self.energy(x, k))
            .sum()
    }

    /// Constraint value in `>= 0` form.
    pub fn constraint(&self, kind: DualKind, k: usize, x: &PrimalA) -> f64 {
        let j = other(k);
        let (sys, ch) = (self.sys, self.ch);
        let u = &sys.users[k];
        match kind {
            DualKind::ReflectCap => x.p[j] - x.q[k],
            DualKind::Harvest => {
                self.slot_time[j]
                    * (sys.eh_coeff * (x.p[j] - x.q[k]) * ch.gain_interuser
                        - u.circuit_power_backscatter)
            }
            DualKind::Sinr => {
                x.p[k] * ch.gain_user_ap[k] - self.interference(x, k) * u.sinr_threshold
            }
            DualKind::MinBits => self.bits(x, k) - u.min_bits,
            DualKind::Budget => u.energy_budget - self.energy(x, k),
            DualKind::Surrogate => {
                let y = self.y[k];
                2.0 * y * (x.p[k] * ch.gain_user_ap[k]).sqrt()
                    - y * y * self.interference(x, k)
                    - x.gamma_bar[k]
            }
            DualKind::CpuCap => u.f_max - x.f[k],
        }
    }

    /// Magnitude of the largest term of a constraint, used to normalize residuals.
    pub fn constraint_scale(&self, kind: DualKind, k: usize, x: &PrimalA) -> f64 {
        let j = other(k);
        let (sys, ch) = (self.sys, self.ch);
        let u = &sys.users[k];
        let s = match kind {
            DualKind::ReflectCap => x.p[j].max(x.q[k]),
            DualKind::Harvest => {
                self.slot_time[j]
                    * (sys.eh_coeff * x.p[j].max(x.q[k]) * ch.gain_interuser)
                        .max(u.circuit_power_backscatter)
            }
            DualKind::Sinr => {
                (x.p[k] * ch.gain_user_ap[k]).max(self.interference(x, k) * u.sinr_threshold)
            }
            DualKind::MinBits => self.bits(x, k).max(u.min_bits),
            DualKind::Budget => u.energy_budget,
            DualKind::Surrogate => {
                let y = self.y[k];
                (2.0 * y * (x.p[k] * ch.gain_user_ap[k]).sqrt())
                    .max(y * y * self.interference(x, k))
                    .max(x.gamma_bar[k])
                    .max(1.0)
            }
            DualKind::CpuCap => u.f_max,
        };
        s.max(f64::MIN_POSITIVE)
    }

    /// Lagrangian of the block; absent constraints contribute nothing.
    pub fn lagrangian(&self, x: &PrimalA, m: &DualMultipliers) -> f64 {
        let mut value = self.objective(x);
        for kind in DualKind::ALL {
            for k in 0..2 {
                if self.has_constraint(kind, k) {
                    value += m.get(kind, k) * self.constraint(kind, k, x);
                }
            }
        }
        value
    }

    /// Variables that are free in this piece; the rest are fixed at zero.
    pub fn is_free(&self, var: PrimalVar, k: usize) -> bool {
        match var {
            PrimalVar::P | PrimalVar::GammaBar => self.slot_active(k),
            PrimalVar::Q => self.reflects(k),
            PrimalVar::F => self.local_computing,
        }
    }

    /// Analytic Lagrangian gradient, plus the magnitude of the largest term in each
    /// component. Fixed variables get zero in both.
    pub fn lagrangian_gradient(&self, x: &PrimalA, m: &DualMultipliers) -> (PrimalA, PrimalA) {
        let (sys, ch) = (self.sys, self.ch);
        let g = ch.gain_interuser;
        let zeta = sys.eh_coeff;
        let b = sys.bandwidth;
        let mut grad = PrimalA::default();
        let mut scale = PrimalA::default();
        for k in 0..2 {
            let j = other(k);
            let u = &sys.users[k];
            let t = self.slot_time;
            let w = 1.0 + m.min_bits[k];
            if self.is_free(PrimalVar::P, k) {
                let mut terms = vec![
                    -(self.eta + m.budget[k]) * t[k],
                    m.sinr[k] * ch.gain_user_ap[k],
                    m.surrogate[k] * self.y[k] * ch.gain_user_ap[k].sqrt() / x.p[k].sqrt(),
                ];
                if self.reflects(j) {
                    terms.push(m.reflect_cap[j]);
                    terms.push(m.harvest[j] * t[k] * zeta * g);
                }
                grad.p[k] = terms.iter().sum();
                scale.p[k] = terms.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
            }
            if self.is_free(PrimalVar::Q, k) {
                let a = self.backscatter_gain(k);
                let terms = [
                    w * t[j] * b * a / (LN_2 * (1.0 + a * x.q[k])),
                    -m.reflect_cap[k],
                    -m.harvest[k] * t[j] * zeta * g,
                    -m.sinr[j] * sys.users[j].sinr_threshold * ch.gain_user_ap[k] * g,
                    -m.surrogate[j] * self.y[j] * self.y[j] * ch.gain_user_ap[k] * g,
                ];
                grad.q[k] = terms.iter().sum();
                scale.q[k] = terms.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
            }
            if self.is_free(PrimalVar::F, k) {
                let terms = [
                    w * sys.frame_time / u.cpu_cycles_per_bit,
                    -3.0 * (self.eta + m.budget[k])
                        * sys.frame_time
                        * u.capacitance_coeff
                        * x.f[k]
                        * x.f[k],
                    -m.cpu_cap[k],
                ];
                grad.f[k] = terms.iter().sum();
                scale.f[k] = terms.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
            }
            if self.is_free(PrimalVar::GammaBar, k) {
                let terms = [
                    w * t[k] * b / (LN_2 * (1.0 + x.gamma_bar[k])),
                    -m.surrogate[k],
                ];
                grad.gamma_bar[k] = terms.iter().sum();
                scale.gamma_bar[k] = terms.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
            }
        }
        (grad, scale)
    }

    /// Maximizer of the Lagrangian over the box `0 <= p <= power_cap`,
    /// `0 <= q <= reflect_cap`, `0 <= f <= freq_cap`, `0 <= gamma_bar <= gamma_cap`,
    /// using the stationarity closed forms. The CPU cap is handled by the box.
    pub fn maximize_lagrangian(&self, m: &DualMultipliers) -> PrimalA {
        let (sys, ch) = (self.sys, self.ch);
        let mut x = PrimalA::default();
        for k in 0..2 {
            let j = other(k);
            if self.slot_active(k) {
                let cap = self.power_cap(k);
                let d = power_denominator(m, k, self.slot_time[k], self.eta, ch, sys);
                let n = m.surrogate[k] * self.y[k] * ch.gain_user_ap[k].sqrt();
                x.p[k] = if d > 0.0 {
                    (n / d).powi(2).min(cap)
                } else if d < 0.0 || n > 0.0 {
                    cap
                } else {
                    0.0
                };
                let gcap = self.gamma_cap(k);
                x.gamma_bar[k] = if m.surrogate[k] > 0.0 {
                    let w = 1.0 + m.min_bits[k];
                    (self.slot_time[k] * sys.bandwidth * w / (LN_2 * m.surrogate[k]) - 1.0)
                        .clamp(0.0, gcap)
                } else {
                    gcap
                };
            }
            if self.reflects(k) {
                let cap = self.reflect_cap(k);
                let numerator = self.slot_time[j] * sys.bandwidth * (1.0 + m.min_bits[k]) / LN_2;
                let d = reflect_denominator(m, k, self.slot_time[j], self.y[j], ch, sys);
                x.q[k] = if d > 0.0 {
                    (numerator / d - 1.0 / self.backscatter_gain(k)).clamp(0.0, cap)
                } else {
                    cap
                };
            }
            if self.local_computing {
                let mut capped = *m;
                capped.cpu_cap[k] = 0.0;
                x.f[k] = primal_f(&capped, sys, self.eta, k);
            }
        }
        x
    }

    /// Dual function value at `m`; an upper bound on the block optimum.
    pub fn dual_value(&self, m: &DualMultipliers) -> f64 {
        let x = self.maximize_lagrangian(m);
        let mut without_cpu = *m;
        without_cpu.cpu_cap = [0.0; 2];
        self.lagrangian(&x, &without_cpu)
    }

    /// Multiplier of the CPU cap implied by a box-clipped frequency.
    pub(crate) fn implied_cpu_multiplier(&self, m: &DualMultipliers, x: &PrimalA, k: usize) -> f64 {
        if !self.local_computing || x.f[k] < self.sys.users[k].f_max {
            return 0.0;
        }
        let u = &self.sys.users[k];
        let t = self.sys.frame_time;
        ((1.0 + m.min_bits[k]) * t / u.cpu_cycles_per_bit
            - 3.0 * (self.eta + m.budget[k]) * t * u.capacitance_coeff * x.f[k] * x.f[k])
            .max(0.0)
    }
}
