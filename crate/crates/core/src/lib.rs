//! Multiple-gradient descent (MGD) for unconstrained multi-objective optimization.
//!
//! The crate computes descent directions shared by several differentiable
//! objectives by solving small linear programs, and drives an iterative
//! descent with either a strictly-decreasing Armijo backtracking or a
//! non-domination backtracking that keeps moving through regions of Pareto
//! critical points.
//!
//! Module map:
//!
//! * [`moo`] problems, evaluations, Pareto dominance
//! * [`lp`] dense bounded-variable primal simplex
//! * [`direction`] the two direction subproblems and critical-case classification
//! * [`descent`] backtracking strategies and the MGD iteration loops
//! * [`problems`] Fonseca-Fleming, Kursawe and Viennet benchmarks
//! * [`metrics`] non-dominated filtering, global Pareto ratio, critical-region scans
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![warn(missing_debug_implementations)]
// `!(a > b)` checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(any(feature = "std", test))]
extern crate std;

pub mod descent;
pub mod direction;
mod error;
pub mod lp;
pub mod matrix;
pub mod metrics;
pub mod moo;
pub mod problems;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use moo::{dominates, evaluate, Evaluation, Problem};
