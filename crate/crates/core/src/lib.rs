//! Computation-efficiency optimization for a two-user mobile edge computing pair in
//! which each user's active transmission powers the partner's backscatter offloading.
//!
//! The crate covers the system model, the fractional-programming transforms, the
//! block solvers of the alternating loop, the scheme optimizer, a closed-form
//! reciprocal-vs-non-reciprocal bit comparison, independent oracles and a Monte
//! Carlo sweep harness.

pub mod error;
pub mod fp;
pub mod gap;
pub mod harness;
pub mod model;
pub mod optimizer;
pub mod oracle;
pub mod subproblem;

pub use error::{Error, Result};
