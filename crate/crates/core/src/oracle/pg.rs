//! First-order oracle for the power/reflection/frequency block.
//!
//! Augmented Lagrangian outer loop on the nonlinear constraints, spectral projected
//! gradient inner loop on the box and the linear power constraints. The objective
//! increases in the slack SINR, so the slack is held at its surrogate bound
//! `max(0, s(p, q))` and the search runs over powers and frequencies only. Objective
//! and constraints are evaluated here from the model definitions, independently of
//! the dual solver.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::model::other;
use crate::subproblem::{DualMultipliers, PrimalA, PrimalVar, SubproblemAInput};

const N: usize = 6;

// Search variables: p0 p1 q0 q1 f0 f1
const fn ip(k: usize) -> usize {
    k
}
const fn iq(k: usize) -> usize {
    2 + k
}
const fn if_(k: usize) -> usize {
    4 + k
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PgConfig {
    pub max_outer: usize,
    pub max_inner: usize,
    /// Projected-gradient stationarity tolerance in scaled variables.
    pub tol: f64,
    /// Normalized constraint violation accepted at the end.
    pub feas_tol: f64,
}

impl Default for PgConfig {
    fn default() -> Self {
        Self {
            max_outer: 40,
            max_inner: 5000,
            tol: 1e-10,
            feas_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgSolution {
    pub primal: PrimalA,
    pub objective: f64,
    /// Largest constraint violation, normalized by the constraint's scale.
    pub max_violation: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub converged: bool,
}

/// Inequality `value >= 0` with its gradient and a fixed normalizing scale.
struct Cons {
    value: f64,
    grad: [f64; N],
    scale: f64,
}

/// Surrogate SINR bound of one slot and its partial derivatives.
struct Slack {
    value: f64,
    d_p: f64,
    d_q: f64,
}

struct Model<'a> {
    input: &'a SubproblemAInput<'a>,
    lower: [f64; N],
    upper: [f64; N],
}

impl<'a> Model<'a> {
    fn new(input: &'a SubproblemAInput<'a>) -> Self {
        let (sys, ch) = (input.sys, input.ch);
        let mut lower = [0.0; N];
        let mut upper = [0.0; N];
        for k in 0..2 {
            let j = other(k);
            let u = &sys.users[k];
            if input.slot_active(k) {
                let cap = (u.energy_budget / input.slot_time[k] - u.circuit_power_active).max(0.0);
                // the SINR requirement alone forces this much power
                let floor = u.sinr_threshold * sys.noise_power / ch.gain_user_ap[k];
                lower[ip(k)] = floor.min(cap);
                upper[ip(k)] = cap;
            }
            if input.backscatter[k] && input.slot_active(j) {
                let uj = &sys.users[j];
                upper[iq(k)] =
                    (uj.energy_budget / input.slot_time[j] - uj.circuit_power_active).max(0.0);
            }
            if input.local_computing {
                upper[if_(k)] = u.f_max;
            }
        }
        Self {
            input,
            lower,
            upper,
        }
    }

    fn slack(&self, z: &[f64; N], k: usize) -> Slack {
        let inp = self.input;
        let ch = inp.ch;
        if !inp.slot_active(k) {
            return Slack {
                value: 0.0,
                d_p: 0.0,
                d_q: 0.0,
            };
        }
        let j = other(k);
        let y = inp.y[k];
        let root = (z[ip(k)] * ch.gain_user_ap[k]).sqrt();
        let coupling = ch.gain_user_ap[j] * ch.gain_interuser;
        Slack {
            value: 2.0 * y * root - y * y * (z[iq(j)] * coupling + inp.sys.noise_power),
            d_p: y * ch.gain_user_ap[k] / root.max(f64::MIN_POSITIVE),
            d_q: -y * y * coupling,
        }
    }

    /// Bits of user k and their gradient, with the slack SINR at its bound.
    fn bits(&self, z: &[f64; N], k: usize) -> (f64, [f64; N]) {
        let inp = self.input;
        let (sys, ch) = (inp.sys, inp.ch);
        let j = other(k);
        let u = &sys.users[k];
        let b = sys.bandwidth;
        let t = inp.slot_time;
        let a = ch.gain_user_ap[k] * ch.gain_interuser / sys.noise_power;
        let s = self.slack(z, k);
        let gamma = s.value.max(0.0);
        let mut grad = [0.0; N];
        grad[if_(k)] = sys.frame_time / u.cpu_cycles_per_bit;
        grad[iq(k)] = t[j] * b * a / (LN_2 * (1.0 + a * z[iq(k)]));
        if s.value > 0.0 {
            let w = t[k] * b / (LN_2 * (1.0 + gamma));
            grad[ip(k)] += w * s.d_p;
            grad[iq(j)] += w * s.d_q;
        }
        let value = sys.frame_time * z[if_(k)] / u.cpu_cycles_per_bit
            + t[k] * b * gamma.ln_1p() / LN_2
            + t[j] * b * (a * z[iq(k)]).ln_1p() / LN_2;
        (value, grad)
    }

    fn energy(&self, z: &[f64; N], k: usize) -> (f64, [f64; N]) {
        let inp = self.input;
        let sys = inp.sys;
        let u = &sys.users[k];
        let f = z[if_(k)];
        let mut grad = [0.0; N];
        grad[ip(k)] = inp.slot_time[k];
        grad[if_(k)] = 3.0 * sys.frame_time * u.capacitance_coeff * f * f;
        let value = inp.slot_time[k] * (z[ip(k)] + u.circuit_power_active)
            + sys.frame_time * u.capacitance_coeff * f * f * f;
        (value, grad)
    }

    fn objective(&self, z: &[f64; N]) -> (f64, [f64; N]) {
        let mut value = 0.0;
        let mut grad = [0.0; N];
        for k in 0..2 {
            let (r, gr) = self.bits(z, k);
            let (e, ge) = self.energy(z, k);
            value += r - self.input.eta * e;
            for i in 0..N {
                grad[i] += gr[i] - self.input.eta * ge[i];
            }
        }
        (value, grad)
    }

    /// Linear constraints `a . z <= b`. The reflection cap is implied by the
    /// harvesting constraint whenever the latter is present.
    fn linear(&self) -> Vec<([f64; N], f64)> {
        let inp = self.input;
        let (sys, ch) = (inp.sys, inp.ch);
        let gi = ch.gain_interuser;
        let mut out = Vec::with_capacity(4);
        for k in 0..2 {
            let j = other(k);
            let u = &sys.users[k];
            if inp.backscatter[k] && inp.slot_active(j) {
                // zeta (p_j - q_k) g >= P_bc
                let mut a = [0.0; N];
                a[ip(j)] = -1.0;
                a[iq(k)] = 1.0;
                out.push((a, -u.circuit_power_backscatter / (sys.eh_coeff * gi)));
            }
            if inp.slot_active(k) {
                // p_k h_k >= gamma_th (q_j h_j g + sigma^2)
                let mut a = [0.0; N];
                a[ip(k)] = -1.0;
                a[iq(j)] = u.sinr_threshold * ch.gain_user_ap[j] * gi / ch.gain_user_ap[k];
                out.push((a, -u.sinr_threshold * sys.noise_power / ch.gain_user_ap[k]));
            }
        }
        out
    }

    /// Nonlinear constraints handled by the augmented Lagrangian.
    fn nonlinear(&self, z: &[f64; N]) -> Vec<Cons> {
        let inp = self.input;
        let sys = inp.sys;
        let mut out = Vec::with_capacity(6);
        for k in 0..2 {
            let j = other(k);
            let u = &sys.users[k];
            if inp.slot_active(k) {
                // the slack SINR must be reachable: s(p, q) >= 0
                let s = self.slack(z, k);
                let mut grad = [0.0; N];
                grad[ip(k)] = s.d_p;
                grad[iq(j)] = s.d_q;
                let y = inp.y[k];
                out.push(Cons {
                    value: s.value,
                    grad,
                    scale: (y * y * sys.noise_power).max(1.0),
                });
            }
            let (r, gr) = self.bits(z, k);
            out.push(Cons {
                value: r - u.min_bits,
                grad: gr,
                scale: u.min_bits.max(1.0),
            });
            let (e, ge) = self.energy(z, k);
            out.push(Cons {
                value: u.energy_budget - e,
                grad: ge.map(|v| -v),
                scale: u.energy_budget,
            });
        }
        out
    }

    fn violation(&self, z: &[f64; N]) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, b) in self.linear() {
            let lhs: f64 = (0..N).map(|i| a[i] * z[i]).sum();
            worst = worst.max((lhs - b) / b.abs().max(f64::MIN_POSITIVE));
        }
        for c in self.nonlinear(z) {
            worst = worst.max(-c.value / c.scale);
        }
        worst
    }

    /// Projection onto the box and the linear constraints in the metric scaled by
    /// `d`. The set splits into two planar polygons, (q_0, p_1) and (q_1, p_0).
    fn project(&self, z: &mut [f64; N], d: &[f64; N]) {
        for k in 0..2 {
            z[if_(k)] = z[if_(k)].clamp(self.lower[if_(k)], self.upper[if_(k)]);
        }
        let linear = self.linear();
        for (qi, pi) in [(iq(0), ip(1)), (iq(1), ip(0))] {
            let mut planes: Vec<([f64; 2], f64)> = vec![
                ([-d[qi], 0.0], -self.lower[qi]),
                ([d[qi], 0.0], self.upper[qi]),
                ([0.0, -d[pi]], -self.lower[pi]),
                ([0.0, d[pi]], self.upper[pi]),
            ];
            for (a, b) in &linear {
                if a[qi] != 0.0 || a[pi] != 0.0 {
                    planes.push(([a[qi] * d[qi], a[pi] * d[pi]], *b));
                }
            }
            let u = project_polygon([z[qi] / d[qi], z[pi] / d[pi]], &planes);
            z[qi] = (u[0] * d[qi]).clamp(self.lower[qi], self.upper[qi]);
            z[pi] = (u[1] * d[pi]).clamp(self.lower[pi], self.upper[pi]);
        }
    }

    fn to_primal(&self, z: &[f64; N]) -> PrimalA {
        PrimalA {
            p: [z[ip(0)], z[ip(1)]],
            q: [z[iq(0)], z[iq(1)]],
            f: [z[if_(0)], z[if_(1)]],
            gamma_bar: [
                self.slack(z, 0).value.max(0.0),
                self.slack(z, 1).value.max(0.0),
            ],
        }
    }
}

/// Euclidean projection onto a convex polygon `{u : a . u <= b}` by enumerating the
/// point itself, its projections on each edge line and all pairwise vertices.
fn project_polygon(u: [f64; 2], planes: &[([f64; 2], f64)]) -> [f64; 2] {
    let feasible = |v: [f64; 2]| {
        planes.iter().all(|(a, b)| {
            let scale = a[0].abs() * v[0].abs() + a[1].abs() * v[1].abs() + b.abs();
            a[0] * v[0] + a[1] * v[1] - b <= 1e-12 * scale.max(f64::MIN_POSITIVE)
        })
    };
    if feasible(u) {
        return u;
    }
    let mut best: Option<([f64; 2], f64)> = None;
    let mut consider = |v: [f64; 2]| {
        if v.iter().all(|x| x.is_finite()) && feasible(v) {
            let dist = (v[0] - u[0]).powi(2) + (v[1] - u[1]).powi(2);
            if best.is_none_or(|(_, d)| dist < d) {
                best = Some((v, dist));
            }
        }
    };
    for (a, b) in planes {
        let nn = a[0] * a[0] + a[1] * a[1];
        if nn > 0.0 {
            let excess = (a[0] * u[0] + a[1] * u[1] - b) / nn;
            consider([u[0] - excess * a[0], u[1] - excess * a[1]]);
        }
    }
    for (i, (a1, b1)) in planes.iter().enumerate() {
        for (a2, b2) in &planes[i + 1..] {
            let det = a1[0] * a2[1] - a1[1] * a2[0];
            if det != 0.0 {
                consider([
                    (b1 * a2[1] - a1[1] * b2) / det,
                    (a1[0] * b2 - b1 * a2[0]) / det,
                ]);
            }
        }
    }
    best.map_or(u, |(v, _)| v)
}

/// Central finite-difference check of the oracle's own objective gradient at `x`
/// (slack SINR eliminated): the largest component error relative to its magnitude.
pub fn objective_gradient_error(input: &SubproblemAInput, x: &PrimalA) -> f64 {
    let model = Model::new(input);
    let z = [x.p[0], x.p[1], x.q[0], x.q[1], x.f[0], x.f[1]];
    let (_, grad) = model.objective(&z);
    let mut worst: f64 = 0.0;
    for i in 0..N {
        if model.upper[i] <= model.lower[i] {
            continue;
        }
        let h = 1e-6 * z[i].abs().max(1e-12);
        let mut zp = z;
        let mut zm = z;
        zp[i] += h;
        zm[i] -= h;
        let fd = (model.objective(&zp).0 - model.objective(&zm).0) / (2.0 * h);
        let denom = grad[i].abs().max(fd.abs()).max(f64::MIN_POSITIVE);
        worst = worst.max((grad[i] - fd).abs() / denom);
    }
    worst
}

/// Central finite-difference check of [`SubproblemAInput::lagrangian_gradient`] at
/// `x`: the largest deviation relative to the largest term of each component.
pub fn lagrangian_gradient_error(
    input: &SubproblemAInput,
    x: &PrimalA,
    duals: &DualMultipliers,
) -> f64 {
    let (grad, scale) = input.lagrangian_gradient(x, duals);
    let mut worst: f64 = 0.0;
    for var in PrimalVar::ALL {
        for k in 0..2 {
            if !input.is_free(var, k) {
                continue;
            }
            let v = x.get(var, k);
            let floor = match var {
                PrimalVar::P => 1e-12,
                PrimalVar::Q => {
                    input.sys.noise_power / (input.ch.gain_user_ap[k] * input.ch.gain_interuser)
                }
                PrimalVar::F => 1.0,
                PrimalVar::GammaBar => 1e-3,
            };
            let h = 1e-6 * v.abs().max(floor);
            let mut xp = *x;
            let mut xm = *x;
            xp.set(var, k, v + h);
            xm.set(var, k, v - h);
            let fd = (input.lagrangian(&xp, duals) - input.lagrangian(&xm, duals)) / (2.0 * h);
            let denom = scale.get(var, k).max(f64::MIN_POSITIVE);
            worst = worst.max((grad.get(var, k) - fd).abs() / denom);
        }
    }
    worst
}

/// Augmented-Lagrangian projected-gradient maximization of the block objective.
pub fn pg_solve_a(input: &SubproblemAInput, cfg: &PgConfig) -> PgSolution {
    let model = Model::new(input);
    let mut z = model.lower;
    for k in 0..2 {
        // start above the floor power so the surrogate has room
        z[ip(k)] = (2.0 * model.lower[ip(k)]).min(model.upper[ip(k)]);
        let u = &input.sys.users[k];
        z[if_(k)] =
            (u.min_bits * u.cpu_cycles_per_bit / input.sys.frame_time).min(model.upper[if_(k)]);
    }
    let obj_scale = model.objective(&z).0.abs().max(1.0);
    let mut nu = vec![0.0; model.nonlinear(&z).len()];
    let mut rho = 10.0;
    let mut last_violation = f64::INFINITY;
    let mut last_objective = f64::NAN;
    let mut inner_total = 0;
    let mut converged = false;
    let mut outer = 0;

    for it in 1..=cfg.max_outer {
        outer = it;
        let mut d = [0.0; N];
        for k in 0..2 {
            d[ip(k)] = z[ip(k)].max(model.lower[ip(k)]).max(1e-12);
            // noise-equivalent reflected power
            d[iq(k)] = z[iq(k)].max(
                input.sys.noise_power / (input.ch.gain_user_ap[k] * input.ch.gain_interuser),
            );
            d[if_(k)] = z[if_(k)].max(1e6);
        }
        let merit = |z: &[f64; N]| -> (f64, [f64; N]) {
            let (f, gf) = model.objective(z);
            let mut value = f / obj_scale;
            let mut grad = gf.map(|v| v / obj_scale);
            for (c, n) in model.nonlinear(z).iter().zip(&nu) {
                let shifted = n - rho * c.value / c.scale;
                if shifted > 0.0 {
                    value -= (shifted * shifted - n * n) / (2.0 * rho);
                    for i in 0..N {
                        grad[i] += shifted * c.grad[i] / c.scale;
                    }
                } else {
                    value += n * n / (2.0 * rho);
                }
            }
            (value, grad)
        };
        let (inner_iters, inner_done, znew) = spg(&model, &merit, z, &d, cfg);
        inner_total += inner_iters;
        z = znew;
        for (c, n) in model.nonlinear(&z).iter().zip(nu.iter_mut()) {
            *n = (*n - rho * c.value / c.scale).max(0.0);
        }
        let violation = model.violation(&z);
        let objective = model.objective(&z).0;
        let settled = (objective - last_objective).abs() <= 1e-12 * obj_scale;
        last_objective = objective;
        if inner_done && violation <= cfg.feas_tol && settled {
            converged = true;
            break;
        }
        if violation > 0.25 * last_violation {
            rho = (rho * 10.0).min(1e12);
        }
        last_violation = violation;
    }
    PgSolution {
        primal: model.to_primal(&z),
        objective: model.objective(&z).0,
        max_violation: model.violation(&z).max(0.0),
        outer_iterations: outer,
        inner_iterations: inner_total,
        converged,
    }
}

/// Spectral projected gradient ascent in the scaled variables `z / d` with a
/// non-monotone Armijo search. Returns the iteration count, whether the
/// stationarity test passed, and the final point.
fn spg<F>(
    model: &Model,
    merit: &F,
    z0: [f64; N],
    d: &[f64; N],
    cfg: &PgConfig,
) -> (usize, bool, [f64; N])
where
    F: Fn(&[f64; N]) -> (f64, [f64; N]),
{
    const MEMORY: usize = 10;
    let mut z = z0;
    model.project(&mut z, d);
    let (mut fz, mut gz) = merit(&z);
    let mut history = vec![fz];
    let scaled = |g: &[f64; N]| -> [f64; N] { std::array::from_fn(|i| g[i] * d[i]) };
    let gnorm = scaled(&gz).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut alpha = if gnorm > 0.0 { 1e-2 / gnorm } else { 1.0 };
    for it in 1..=cfg.max_inner {
        let gs = scaled(&gz);
        let mut trial: [f64; N] = std::array::from_fn(|i| z[i] + gs[i] * d[i]);
        model.project(&mut trial, d);
        let pg = (0..N).fold(0.0f64, |a, i| a.max(((trial[i] - z[i]) / d[i]).abs()));
        if pg <= cfg.tol {
            return (it, true, z);
        }
        let mut cand: [f64; N] = std::array::from_fn(|i| z[i] + alpha * gs[i] * d[i]);
        model.project(&mut cand, d);
        let dir: [f64; N] = std::array::from_fn(|i| cand[i] - z[i]);
        let slope: f64 = (0..N).map(|i| gz[i] * dir[i]).sum();
        let reference = history.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut lambda = 1.0;
        let (znew, fnew, gnew) = loop {
            let zt: [f64; N] = std::array::from_fn(|i| z[i] + lambda * dir[i]);
            let (ft, gt) = merit(&zt);
            if ft >= reference + 1e-4 * lambda * slope || lambda < 1e-20 {
                break (zt, ft, gt);
            }
            lambda *= 0.5;
        };
        if lambda < 1e-20 {
            // no numerical ascent left along the projected direction
            return (it, true, z);
        }
        let mut ss = 0.0;
        let mut sy = 0.0;
        for i in 0..N {
            let s = (znew[i] - z[i]) / d[i];
            let y = -(gnew[i] - gz[i]) * d[i];
            ss += s * s;
            sy += s * y;
        }
        alpha = if sy > 0.0 {
            (ss / sy).clamp(1e-30, 1e30)
        } else {
            (alpha * 4.0).min(1e30)
        };
        z = znew;
        fz = fnew;
        gz = gnew;
        history.push(fz);
        if history.len() > MEMORY {
            history.remove(0);
        }
    }
    (cfg.max_inner, false, z)
}
