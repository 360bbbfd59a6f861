use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fp::surrogate_sinr;
use crate::model::{other, ChannelRealization, Decision, SystemParams};

/// Half-plane `a . t <= b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    pub a: [f64; 2],
    pub b: f64,
}

impl HalfPlane {
    fn slack(&self, t: [f64; 2]) -> f64 {
        self.b - self.a[0] * t[0] - self.a[1] * t[1]
    }

    fn scale(&self, frame_time: f64) -> f64 {
        (self.a[0].abs() + self.a[1].abs()) * frame_time + self.b.abs()
    }
}

/// Linear program in the two slot times with fixed power, reflection and frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeAllocationLp {
    /// Net objective coefficient per second of each slot (bits minus priced energy).
    pub objective: [f64; 2],
    /// Objective part that does not depend on the slot times.
    pub constant: f64,
    pub constraints: Vec<HalfPlane>,
    pub frame_time: f64,
}

/// Relative tolerance for accepting a vertex.
const VERTEX_TOL: f64 = 1e-12;

impl TimeAllocationLp {
    /// Build the LP for fixed `dec` (its slot times are ignored) and auxiliaries `y`.
    ///
    /// Active rates use the quadratic-transform surrogate at `y`. A slot whose
    /// transmit power is zero is closed.
    pub fn build(
        sys: &SystemParams,
        ch: &ChannelRealization,
        dec: &Decision,
        y: [f64; 2],
        eta: f64,
    ) -> Result<Self> {
        let b = sys.bandwidth;
        let t = sys.frame_time;
        let mut active = [0.0; 2];
        // reflected[k]: rate user k earns per second of the partner's slot
        let mut reflected = [0.0; 2];
        for k in 0..2 {
            let j = other(k);
            if dec.transmit_power[k] > 0.0 {
                let arg = 1.0 + surrogate_sinr(dec, ch, sys, y[k], k);
                if !(arg > 0.0) {
                    return Err(Error::SurrogateDomain { user: k, argument: arg });
                }
                active[k] = b * arg.log2();
            }
            let snr = dec.reflection_coeff[k] * dec.transmit_power[j] * ch.gain_user_ap[k]
                * ch.gain_interuser
                / sys.noise_power;
            reflected[k] = b * snr.ln_1p() / std::f64::consts::LN_2;
        }
        let mut objective = [0.0; 2];
        let mut constant = 0.0;
        let mut constraints = vec![
            HalfPlane { a: [-1.0, 0.0], b: 0.0 },
            HalfPlane { a: [0.0, -1.0], b: 0.0 },
            HalfPlane { a: [1.0, 1.0], b: t },
        ];
        for k in 0..2 {
            let j = other(k);
            let u = &sys.users[k];
            let f = dec.cpu_freq[k];
            let local_bits = t * f / u.cpu_cycles_per_bit;
            let local_energy = t * u.capacitance_coeff * f.powi(3);
            let power = dec.transmit_power[k] + u.circuit_power_active;
            objective[k] += active[k] + reflected[j] - eta * power;
            constant += local_bits - eta * local_energy;

            // bits: local + t_k active_k + t_j reflected_k >= R_th
            let mut a = [0.0; 2];
            a[k] = -active[k];
            a[j] = -reflected[k];
            constraints.push(HalfPlane {
                a,
                b: local_bits - u.min_bits,
            });
            // energy: t_k (p_k + P_ac) + local <= E_bud
            let mut a = [0.0; 2];
            a[k] = power;
            constraints.push(HalfPlane {
                a,
                b: u.energy_budget - local_energy,
            });
            if dec.transmit_power[k] <= 0.0 {
                let mut a = [0.0; 2];
                a[k] = 1.0;
                constraints.push(HalfPlane { a, b: 0.0 });
            }
        }
        Ok(Self {
            objective,
            constant,
            constraints,
            frame_time: t,
        })
    }

    pub fn value(&self, t: [f64; 2]) -> f64 {
        self.constant + self.objective[0] * t[0] + self.objective[1] * t[1]
    }

    /// Feasibility with a tolerance relative to each constraint's magnitude.
    pub fn is_feasible(&self, t: [f64; 2], rel_tol: f64) -> bool {
        self.constraints
            .iter()
            .all(|h| h.slack(t) >= -rel_tol * h.scale(self.frame_time))
    }

    /// All vertices of the feasible polygon, in enumeration order.
    pub fn vertices(&self) -> Vec<[f64; 2]> {
        let mut out = Vec::new();
        let n = self.constraints.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let (h1, h2) = (&self.constraints[i], &self.constraints[j]);
                let det = h1.a[0] * h2.a[1] - h1.a[1] * h2.a[0];
                let norm = (h1.a[0].abs() + h1.a[1].abs()) * (h2.a[0].abs() + h2.a[1].abs());
                if det.abs() <= 1e-14 * norm {
                    continue;
                }
                let t = [
                    (h1.b * h2.a[1] - h1.a[1] * h2.b) / det,
                    (h1.a[0] * h2.b - h1.b * h2.a[0]) / det,
                ];
                if t.iter().all(|v| v.is_finite()) && self.is_feasible(t, VERTEX_TOL) {
                    out.push(t);
                }
            }
        }
        out
    }

    /// Optimal vertex. Among several optimal vertices the point of the optimal face
    /// maximizing `min(t_1, t_2)` is returned.
    pub fn solve(&self) -> Result<[f64; 2]> {
        let vertices = self.vertices();
        if vertices.is_empty() {
            return Err(Error::Infeasible("slot-time polygon is empty".into()));
        }
        let best = vertices
            .iter()
            .map(|&t| self.value(t))
            .fold(f64::NEG_INFINITY, f64::max);
        let spread = self.objective[0].abs().max(self.objective[1].abs()) * self.frame_time
            + best.abs();
        let optimal: Vec<[f64; 2]> = vertices
            .into_iter()
            .filter(|&t| self.value(t) >= best - 1e-12 * spread)
            .collect();
        let mut candidates = optimal.clone();
        // min(t1, t2) on the optimal face may peak where it crosses t1 = t2.
        for a in &optimal {
            for b in &optimal {
                let (da, db) = (a[0] - a[1], b[0] - b[1]);
                if da < 0.0 && db > 0.0 {
                    let s = da / (da - db);
                    let t0 = a[0] + s * (b[0] - a[0]);
                    candidates.push([t0, t0]);
                }
            }
        }
        let key = |t: &[f64; 2]| t[0].min(t[1]);
        let mut choice = candidates[0];
        for t in candidates.into_iter().skip(1) {
            let (kc, kt) = (key(&choice), key(&t));
            if kt > kc || (kt == kc && (t[0], t[1]) < (choice[0], choice[1])) {
                choice = t;
            }
        }
        Ok([choice[0].max(0.0), choice[1].max(0.0)])
    }
}

/// Optimal slot times for fixed power, reflection and frequency.
pub fn solve_subproblem_b(
    sys: &SystemParams,
    ch: &ChannelRealization,
    dec: &Decision,
    y: [f64; 2],
    eta: f64,
) -> Result<[f64; 2]> {
    TimeAllocationLp::build(sys, ch, dec, y, eta)?.solve()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(objective: [f64; 2], extra: Vec<HalfPlane>) -> TimeAllocationLp {
        let mut constraints = vec![
            HalfPlane { a: [-1.0, 0.0], b: 0.0 },
            HalfPlane { a: [0.0, -1.0], b: 0.0 },
            HalfPlane { a: [1.0, 1.0], b: 1.0 },
        ];
        constraints.extend(extra);
        TimeAllocationLp {
            objective,
            constant: 0.0,
            constraints,
            frame_time: 1.0,
        }
    }

    #[test]
    fn symmetric_tie_splits_the_frame() {
        let t = lp([3.0, 3.0], vec![]).solve().unwrap();
        assert!((t[0] - 0.5).abs() < 1e-15 && (t[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lower_bound_of_weaker_user_binds() {
        // user 2 needs 0.3 * 1e6 >= 2e5 -> t2 >= 0.2 (written as -1e6 t2 <= -2e5)
        let t = lp(
            [5.0, 2.0],
            vec![HalfPlane { a: [0.0, -1e6], b: -2e5 }],
        )
        .solve()
        .unwrap();
        assert!((t[1] - 0.2).abs() < 1e-12, "{t:?}");
        assert!((t[0] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn empty_polygon_is_infeasible() {
        let err = lp([1.0, 1.0], vec![HalfPlane { a: [-1.0, -1.0], b: -2.0 }]).solve();
        assert!(matches!(err, Err(Error::Infeasible(_))));
    }

    #[test]
    fn negative_coefficients_leave_slots_empty() {
        let t = lp([-1.0, -2.0], vec![]).solve().unwrap();
        assert_eq!(t, [0.0, 0.0]);
    }
}
