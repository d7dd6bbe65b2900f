//! Cost of update delay (CoUD) and value of information of update (VoIU)
//! for a status-update source feeding an M/M/1 FCFS queue.
//!
//! The crate provides closed-form and quadrature averages ([`analytic`]), a
//! seeded discrete-event simulator ([`sim`]), utilization sweeps and
//! golden-section optimization ([`sweep`]), and the command layer behind the
//! `freshsim` binary ([`cli`]).

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod costmodel;
pub mod error;
pub mod sim;
pub mod specfun;
pub mod sweep;

pub use error::{Error, Result};
