//! Modified Patankar integrators and bound-preserving DG for reactive Euler flows.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cases;
pub mod chemistry;
pub mod config;
pub mod dg;
pub mod error;
pub mod harness;
pub mod integrators;
pub mod limiter;
pub mod linalg;
pub mod output;
pub mod pds;
pub mod solver;
pub mod state;
pub mod study;
pub mod verify;

pub use error::{Error, Result};
