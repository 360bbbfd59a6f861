//! Independent oracles: an exact search over a finite grid of decisions and a
//! first-order solver for the power/reflection/frequency block.

pub mod grid;
pub mod pg;

pub use grid::{grid_search_bruteforce, grid_search_solve, GridSolution, GridSpec};
pub use pg::{lagrangian_gradient_error, objective_gradient_error, pg_solve_a, PgConfig, PgSolution};
