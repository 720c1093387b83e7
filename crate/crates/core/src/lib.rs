//! Explicit rates of asymptotic regularity for the generalized
//! Krasnoselskii-Mann iteration
//!
//! ```text
//! x_{n+1} = α_n x_n + β_n T x_n + r_n
//! ```
//!
//! in uniformly convex normed spaces, together with an iteration engine and
//! an empirical harness that checks the rates against computed trajectories.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificates;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod moduli;
pub mod operators;
pub mod schedules;
pub mod verify;

pub use error::{KmError, Result};
pub use moduli::{LiminfModulus, Nat, RateFn, RateKind, UcModulus};
