//! Monte Carlo run-length evaluation and chart-design tooling on top of
//! `stein-spc-core`.
//!
//! * [`simrl`] — parallel zero-state ARL and conditional-expected-delay
//!   estimation with deterministic per-replication substreams;
//! * [`calibrate`] — control-limit search by bisection under common
//!   random numbers, plus the analytic c-chart design;
//! * [`presets`] — pre-calibrated chart designs and the benchmark grids;
//! * [`formats`] — counts CSV input, design-record JSON, trajectory CSV,
//!   and the result-table CSV/JSON writers;
//! * [`svg`] — minimal static chart rendering;
//! * [`cli`] — the `stein-spc` command-line interface.

// negated float comparisons like `!(x > 0.0)` also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibrate;
pub mod cli;
pub mod formats;
pub mod presets;
pub mod simrl;
pub mod svg;

pub use calibrate::{c_chart_design, find_l, CChartDesign, Calibration};
pub use simrl::{ced, zero_state_arl, ChangeScenario, RunLengthStats, SimError};
