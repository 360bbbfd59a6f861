//! Oracle cross-checks and closed-form gap draws over random channels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::sweep::trial_seed;
use crate::error::Result;
use crate::fp::update_y;
use crate::gap::{bits_gap, GapCase, GapResult, GapScenario};
use crate::model::{check_constraints, compute_metrics, draw_channel, other, Decision};
use crate::optimizer::{alternating_solve, initialize_feasible, Scheme, SolverConfig};
use crate::oracle::{grid_search_solve, lagrangian_gradient_error, pg_solve_a, GridSpec, PgConfig};
use crate::subproblem::{solve_subproblem_a, DualAscentConfig, SubproblemAInput, TimeAllocationLp};

/// Agreement bound between the dual block solver and the first-order oracle.
pub const BLOCK_REL_TOL: f64 = 5e-3;
/// Finite-difference bound on the Lagrangian gradient at returned points.
pub const GRADIENT_REL_TOL: f64 = 1e-2;
/// Random feasible points compared against each slot-time LP solution.
pub const LP_SAMPLES: usize = 1000;

/// Cross-check results for one channel draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRow {
    pub trial: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub block_objective: f64,
    pub oracle_objective: f64,
    pub block_rel_gap: f64,
    pub gradient_error: f64,
    /// Largest relative amount by which a random feasible slot pair beat the LP vertex.
    pub lp_excess: f64,
    pub optimizer_ce: f64,
    pub grid_ce: Option<f64>,
    pub grid_bound: Option<f64>,
    /// Largest constraint residual of the optimizer's decision.
    pub max_residual: f64,
    pub passed: bool,
}

/// The block instance used by the audit: slots `T/2`, auxiliaries and the price
/// taken from the feasible starting point of the proposed scheme.
pub fn audit_block_start(
    sys: &crate::model::SystemParams,
    ch: &crate::model::ChannelRealization,
) -> Result<(Decision, [f64; 2], f64)> {
    let init = initialize_feasible(sys, ch, Scheme::Proposed)?;
    let y = [update_y(&init, ch, sys, 0), update_y(&init, ch, sys, 1)];
    let eta = compute_metrics(&init, ch, sys)?.ce;
    Ok((init, y, eta))
}

/// Largest amount, relative to `max(1, |LP optimum|)`, by which any of `samples`
/// uniformly drawn feasible slot pairs beats the LP solution (at most 0 when the
/// solution is optimal).
pub fn lp_excess(lp: &TimeAllocationLp, samples: usize, rng: &mut impl Rng) -> Result<f64> {
    let t = lp.solve()?;
    let best = lp.value(t);
    let frame = lp.frame_time;
    let mut worst = f64::NEG_INFINITY;
    let mut found = 0;
    let mut attempts = 0;
    while found < samples && attempts < 200 * samples {
        attempts += 1;
        let cand = [rng.random::<f64>() * frame, rng.random::<f64>() * frame];
        if !lp.is_feasible(cand, 0.0) {
            continue;
        }
        found += 1;
        worst = worst.max((lp.value(cand) - best) / best.abs().max(1.0));
    }
    Ok(worst)
}

/// Run every oracle check on `trials` channel draws of `cfg` (at its base
/// parameters). The optimizer and grid comparisons use `scheme`; `grid` of `None`
/// skips the grid comparison.
pub fn verify_instances(
    cfg: &ExperimentConfig,
    solver: &SolverConfig,
    scheme: Scheme,
    trials: usize,
    grid: Option<&GridSpec>,
) -> Vec<VerifyRow> {
    let sys = cfg.sys;
    (0..trials)
        .map(|trial| {
            let seed = trial_seed(cfg.master_seed, trial);
            let ch = draw_channel(seed, &cfg.channel);
            let mut row = VerifyRow {
                trial,
                seed,
                scheme,
                block_objective: f64::NAN,
                oracle_objective: f64::NAN,
                block_rel_gap: f64::NAN,
                gradient_error: f64::NAN,
                lp_excess: f64::NAN,
                optimizer_ce: 0.0,
                grid_ce: None,
                grid_bound: None,
                max_residual: f64::NAN,
                passed: false,
            };
            let Ok((init, y, eta)) = audit_block_start(&sys, &ch) else {
                return row;
            };
            let input = SubproblemAInput::new(&sys, &ch, init.slot_time, y, eta);
            if let Ok(s) = solve_subproblem_a(&input, &DualAscentConfig::default()) {
                let pg = pg_solve_a(&input, &PgConfig::default());
                row.block_objective = s.objective;
                row.oracle_objective = pg.objective;
                row.block_rel_gap =
                    (pg.objective - s.objective).abs() / s.objective.abs().max(f64::MIN_POSITIVE);
                row.gradient_error = lagrangian_gradient_error(&input, &s.raw_primal, &s.duals);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            if let Ok(lp) = TimeAllocationLp::build(&sys, &ch, &init, y, eta) {
                row.lp_excess = lp_excess(&lp, LP_SAMPLES, &mut rng).unwrap_or(f64::NAN);
            }
            let report = alternating_solve(&sys, &ch, scheme, solver);
            row.optimizer_ce = report.ce;
            row.max_residual = check_constraints(&report.decision, &ch, &sys).max_residual();
            let mut grid_ok = true;
            if let Some(grid) = grid {
                if let Ok(g) = grid_search_solve(&sys, &ch, scheme, grid) {
                    grid_ok = report.ce >= g.ce - g.resolution_bound;
                    row.grid_ce = Some(g.ce);
                    row.grid_bound = Some(g.resolution_bound);
                }
            }
            row.passed = row.block_rel_gap <= BLOCK_REL_TOL
                && row.gradient_error <= GRADIENT_REL_TOL
                && row.lp_excess <= 1e-9
                && report.feasible
                && row.max_residual <= 1e-9
                && grid_ok;
            row
        })
        .collect()
}

/// One random constant-power gap scenario and its evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub trial: usize,
    pub seed: u64,
    pub user: usize,
    pub scenario: GapScenario,
    pub result: GapResult,
    /// Sufficient condition for a non-negative gap in the scenario's case.
    pub condition_holds: bool,
}

/// Flat CSV form of a [`GapRow`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub trial: usize,
    pub seed: u64,
    pub user: usize,
    pub case: GapCase,
    pub alpha: f64,
    pub reciprocal_bits: f64,
    pub nonreciprocal_bits: f64,
    pub gap_bits: f64,
    pub condition_holds: bool,
}

impl From<&GapRow> for GapRecord {
    fn from(row: &GapRow) -> Self {
        Self {
            trial: row.trial,
            seed: row.seed,
            user: row.user,
            case: row.result.case,
            alpha: row.result.alpha,
            reciprocal_bits: row.result.reciprocal_bits,
            nonreciprocal_bits: row.result.nonreciprocal_bits,
            gap_bits: row.result.gap,
            condition_holds: row.condition_holds,
        }
    }
}

/// Gap analysis on `trials` channel draws, alternating the analysed user.
pub fn gap_draws(cfg: &ExperimentConfig, trials: usize) -> Vec<GapRow> {
    (0..trials)
        .map(|trial| {
            let seed = trial_seed(cfg.master_seed, trial);
            let ch = draw_channel(seed, &cfg.channel);
            let user = trial % 2;
            let scn = GapScenario {
                p0: cfg.gap_power,
                sys: cfg.sys,
                ch,
                user,
            };
            let result = bits_gap(&scn);
            let condition_holds = gap_condition(&scn, result.case);
            GapRow {
                trial,
                seed,
                user,
                scenario: scn,
                result,
                condition_holds,
            }
        })
        .collect()
}

/// Sufficient condition for a non-negative gap: the link to the partner can power
/// its circuit (harvest-limited case) or the active SINR clears its threshold
/// (SINR-limited case).
pub fn gap_condition(scn: &GapScenario, case: GapCase) -> bool {
    let (k, j) = (scn.user, other(scn.user));
    let sys = &scn.sys;
    match case {
        GapCase::A => {
            scn.ch.gain_interuser
                > sys.users[j].circuit_power_backscatter / (scn.p0 * sys.eh_coeff)
        }
        GapCase::B => {
            scn.ch.gain_user_ap[k] > sys.users[k].sinr_threshold * sys.noise_power / scn.p0
        }
        GapCase::Inactive => true,
    }
}
