//! Monitoring primitives for independent Poisson count streams.
//!
//! The crate provides the pure, allocation-light building blocks:
//!
//! * [`dist`] — Poisson, negative-binomial, and zero-inflated-Poisson
//!   count models parametrized by mean and dispersion index, with exact
//!   moments, PMFs, and deterministic sampling;
//! * [`stein`] — Stein–Chen weight functions and the truncated moment
//!   sums that seed the generalized EWMA charts;
//! * [`charts`] — streaming state machines for the c-chart, ordinary
//!   EWMA, AB-EWMA, and ABC-EWMA with alarm decisions;
//! * [`phase1`] — retrospective diagnostics: dispersion-index test,
//!   autocorrelations, Poisson and zero-inflated-Poisson fits;
//! * [`special`] — the log-gamma / incomplete-gamma kernel backing the
//!   tail probabilities;
//! * [`rng`] — per-replication substreams for reproducible parallel
//!   Monte Carlo.
//!
//! Run-length simulation, control-limit calibration, and all file / CLI
//! plumbing live in the companion `stein-spc` crate; this crate is
//! `no_std`-compatible (`alloc` required) when built without the `std`
//! feature.

#![cfg_attr(not(feature = "std"), no_std)]
// negated float comparisons like `!(x > 0.0)` also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod charts;
pub mod dist;
mod error;
mod math;
pub mod phase1;
pub mod rng;
pub mod special;
pub mod stein;

pub use charts::{ChartSpec, ChartState, Decision, Monitoring};
pub use dist::{CountModel, Family};
pub use error::Error;
pub use rng::Substreams;
pub use stein::{SteinMoments, Truncation, WeightFunction};

/// Crate-wide result type.
pub type Result<T> = core::result::Result<T, Error>;
