//! The two blocks of the alternating loop: power, reflection, frequency and slack
//! SINR for fixed slot times (dual closed forms), and slot times for fixed
//! everything else (a two-variable LP).

mod duals;
mod kkt;
mod lp;
mod problem_a;

pub use duals::{
    primal_f, primal_gamma, primal_p, primal_q, recover_alpha, DualKind, DualMultipliers,
};
pub use kkt::{
    kkt_violation, solve_subproblem_a, solve_subproblem_a_from, DualAscentConfig,
    SubproblemASolution,
};
pub use lp::{solve_subproblem_b, HalfPlane, TimeAllocationLp};
pub use problem_a::{PrimalA, PrimalVar, SubproblemAInput};
