//! Fractional-programming transforms: the Dinkelbach parametric loop over the CE
//! ratio and the quadratic-transform surrogate of the active rate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    compute_metrics, other, ChannelRealization, Decision, Metrics, SystemParams,
};

/// Default Dinkelbach stopping tolerance, relative to `max(1, total energy)`.
pub const DINKELBACH_TOL: f64 = 1e-6;
pub const DINKELBACH_MAX_OUTER: usize = 50;

/// `sum R_tot / sum E_tot`.
pub fn dinkelbach_eta_update(metrics: &Metrics) -> Result<f64> {
    let energy = metrics.total_energy();
    if !(energy > 0.0) {
        return Err(Error::NoActivity);
    }
    Ok(metrics.total_bits() / energy)
}

/// Interference-plus-noise seen by user k's active signal.
fn interference_plus_noise(
    dec: &Decision,
    ch: &ChannelRealization,
    sys: &SystemParams,
    k: usize,
) -> f64 {
    let j = other(k);
    dec.reflection_coeff[j] * dec.transmit_power[k] * ch.gain_user_ap[j] * ch.gain_interuser
        + sys.noise_power
}

/// The quadratic-transform replacement of user k's SINR:
/// `2 y sqrt(p h) - y^2 (interference + noise)`.
pub fn surrogate_sinr(
    dec: &Decision,
    ch: &ChannelRealization,
    sys: &SystemParams,
    y: f64,
    k: usize,
) -> f64 {
    let signal = (dec.transmit_power[k] * ch.gain_user_ap[k]).sqrt();
    2.0 * y * signal - y * y * interference_plus_noise(dec, ch, sys, k)
}

/// Surrogate active bits `t_k B log2(1 + surrogate_sinr)`.
pub fn surrogate_rate(
    dec: &Decision,
    ch: &ChannelRealization,
    sys: &SystemParams,
    y: f64,
    k: usize,
) -> Result<f64> {
    let argument = 1.0 + surrogate_sinr(dec, ch, sys, y, k);
    if !(argument > 0.0) {
        return Err(Error::SurrogateDomain { user: k, argument });
    }
    Ok(dec.slot_time[k] * sys.bandwidth * argument.log2())
}

/// Auxiliary variable that makes the surrogate tight: `sqrt(p h) / (I + N)`.
pub fn update_y(dec: &Decision, ch: &ChannelRealization, sys: &SystemParams, k: usize) -> f64 {
    (dec.transmit_power[k] * ch.gain_user_ap[k]).sqrt()
        / interference_plus_noise(dec, ch, sys, k)
}

/// Quadratic-transform auxiliaries plus the slack SINR of each user.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryVars {
    pub y: [f64; 2],
    pub gamma_bar: [f64; 2],
}

impl AuxiliaryVars {
    /// Tight auxiliaries for `dec`; the slack SINR then equals the true SINR.
    pub fn tight(dec: &Decision, ch: &ChannelRealization, sys: &SystemParams) -> Self {
        let y = [update_y(dec, ch, sys, 0), update_y(dec, ch, sys, 1)];
        let gamma_bar = [
            surrogate_sinr(dec, ch, sys, y[0], 0).max(0.0),
            surrogate_sinr(dec, ch, sys, y[1], 1).max(0.0),
        ];
        Self { y, gamma_bar }
    }
}

/// One point of the Dinkelbach trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DinkelbachState {
    /// Ratio parameter used by this outer iteration.
    pub eta: f64,
    pub outer_iteration: usize,
    /// `sum R_tot - eta * sum E_tot` at the inner solver's output (bits).
    pub last_objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DinkelbachOutcome {
    pub decision: Decision,
    pub metrics: Metrics,
    /// CE of the returned decision.
    pub eta: f64,
    pub trace: Vec<DinkelbachState>,
    pub converged: bool,
}

impl DinkelbachOutcome {
    pub fn outer_iterations(&self) -> usize {
        self.trace.len()
    }

    /// Parametric objective of the last outer iteration.
    pub fn final_objective(&self) -> f64 {
        self.trace.last().map_or(0.0, |s| s.last_objective)
    }
}

/// Dinkelbach loop on the CE ratio.
///
/// Starts from `eta = CE(init)`. Each outer step calls `inner(eta, current)`, which
/// must return a feasible decision that (approximately) maximizes
/// `sum R_tot - eta * sum E_tot`, then sets `eta` to the CE of that decision. Stops once
/// `|F(eta)| <= tol * max(1, sum E_tot)` or after `max_outer` steps.
pub fn dinkelbach_solve<F>(
    init: Decision,
    sys: &SystemParams,
    ch: &ChannelRealization,
    mut inner: F,
    tol: f64,
    max_outer: usize,
) -> Result<DinkelbachOutcome>
where
    F: FnMut(f64, &Decision) -> Result<Decision>,
{
    let mut decision = init;
    let mut metrics = compute_metrics(&decision, ch, sys)?;
    let mut eta = dinkelbach_eta_update(&metrics)?;
    let mut trace = Vec::new();
    let mut converged = false;
    for outer in 1..=max_outer {
        let next = inner(eta, &decision)?;
        let next_metrics = compute_metrics(&next, ch, sys)?;
        let energy = next_metrics.total_energy();
        let objective = next_metrics.total_bits() - eta * energy;
        trace.push(DinkelbachState {
            eta,
            outer_iteration: outer,
            last_objective: objective,
        });
        decision = next;
        metrics = next_metrics;
        eta = dinkelbach_eta_update(&metrics)?;
        if objective.abs() <= tol * energy.max(1.0) {
            converged = true;
            break;
        }
    }
    Ok(DinkelbachOutcome {
        decision,
        metrics,
        eta,
        trace,
        converged,
    })
}
