//! Streaming control charts for count data.
//!
//! Four charts share one state-machine interface:
//!
//! * c-chart — the raw count is plotted; counts at or above a threshold
//!   alarm (one-sided).
//! * EWMA — `Z_t = λ x_t + (1−λ) Z_{t−1}`, `Z_0 = μ₀`, limits `μ₀ ∓ L`.
//! * AB-EWMA — `A_t` and `B_t` smooth `x f(x)` and `f(x+1)`; the plotted
//!   statistic `A_t / B_t` targets `μ₀` under the in-control Poisson,
//!   limits `μ₀ ∓ L`.
//! * ABC-EWMA — additionally `C_t` smooths `x`; `A_t / (B_t C_t)`
//!   targets 1, limits `1 ∓ L`.
//!
//! The AB/ABC accumulators start at the exact in-control moments, so the
//! plotted statistic sits on its center line before any data arrive. A
//! statistic exactly on a limit does not alarm; violations are strict.
//! With `λ < 1`, a positive initial `B_0` and nonnegative weights keep
//! `B_t > 0` for all t, which is why the AB/ABC charts reject `λ = 1`.

use alloc::vec::Vec;

use crate::stein::{stein_moments_poisson, Truncation, WeightFunction};
use crate::{Error, Result};

/// Immutable chart design.
#[derive(Clone, Debug, PartialEq)]
pub enum ChartSpec {
    /// One-sided Shewhart chart on raw counts: alarm when `x ≥ threshold`.
    CChart { mu0: f64, threshold: u64 },
    /// Ordinary EWMA with smoothing `lambda` and limits `mu0 ∓ limit`.
    Ewma { mu0: f64, lambda: f64, limit: f64 },
    /// AB-EWMA with limits `mu0 ∓ limit`.
    AbEwma {
        mu0: f64,
        lambda: f64,
        weight: WeightFunction,
        limit: f64,
    },
    /// ABC-EWMA with limits `1 ∓ limit`.
    AbcEwma {
        mu0: f64,
        lambda: f64,
        weight: WeightFunction,
        limit: f64,
    },
}

/// Alarm decision for one plotted point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    InControl,
    Alarm,
}

/// Result of monitoring a whole series.
#[derive(Clone, Debug, PartialEq)]
pub struct Monitoring {
    /// 1-based index of the first alarm, if any.
    pub first_alarm: Option<usize>,
    /// Plotted statistic at every time point (monitoring continues past
    /// alarms so trajectories stay complete).
    pub stats: Vec<f64>,
}

impl ChartSpec {
    pub fn mu0(&self) -> f64 {
        match *self {
            ChartSpec::CChart { mu0, .. }
            | ChartSpec::Ewma { mu0, .. }
            | ChartSpec::AbEwma { mu0, .. }
            | ChartSpec::AbcEwma { mu0, .. } => mu0,
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match *self {
            ChartSpec::CChart { .. } => None,
            ChartSpec::Ewma { lambda, .. }
            | ChartSpec::AbEwma { lambda, .. }
            | ChartSpec::AbcEwma { lambda, .. } => Some(lambda),
        }
    }

    pub fn limit(&self) -> Option<f64> {
        match *self {
            ChartSpec::CChart { .. } => None,
            ChartSpec::Ewma { limit, .. }
            | ChartSpec::AbEwma { limit, .. }
            | ChartSpec::AbcEwma { limit, .. } => Some(limit),
        }
    }

    pub fn weight(&self) -> Option<&WeightFunction> {
        match self {
            ChartSpec::AbEwma { weight, .. } | ChartSpec::AbcEwma { weight, .. } => Some(weight),
            _ => None,
        }
    }

    /// Same design with a different limit half-width (c-chart unchanged).
    pub fn with_limit(&self, l: f64) -> Self {
        let mut spec = self.clone();
        match &mut spec {
            ChartSpec::Ewma { limit, .. }
            | ChartSpec::AbEwma { limit, .. }
            | ChartSpec::AbcEwma { limit, .. } => *limit = l,
            ChartSpec::CChart { .. } => {}
        }
        spec
    }

    /// Center line of the plotted statistic.
    pub fn center(&self) -> f64 {
        match self {
            ChartSpec::AbcEwma { .. } => 1.0,
            _ => self.mu0(),
        }
    }

    /// `(LCL, UCL)`; the c-chart is one-sided with its alarm threshold
    /// as the upper limit (counts at the limit alarm).
    pub fn limits(&self) -> (Option<f64>, Option<f64>) {
        match *self {
            ChartSpec::CChart { threshold, .. } => (None, Some(threshold as f64)),
            _ => {
                let c = self.center();
                let l = self.limit().unwrap_or(0.0);
                (Some(c - l), Some(c + l))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mu0 = self.mu0();
        if !(mu0 > 0.0) || !mu0.is_finite() {
            return Err(Error::Spec("mu0 must be positive and finite"));
        }
        if let Some(lambda) = self.lambda() {
            if !(lambda > 0.0 && lambda <= 1.0) {
                return Err(Error::Spec("lambda must lie in (0, 1]"));
            }
        }
        if let Some(l) = self.limit() {
            if !(l >= 0.0) || !l.is_finite() {
                return Err(Error::Spec("limit half-width must be nonnegative"));
            }
        }
        match self {
            ChartSpec::AbEwma { lambda, .. } | ChartSpec::AbcEwma { lambda, .. }
                if *lambda >= 1.0 =>
            {
                // at lambda = 1 a single zero-weight count zeroes B_t
                Err(Error::Spec("AB/ABC charts require lambda < 1"))
            }
            _ => Ok(()),
        }
    }

    /// Alarm decision for one plotted value (the raw count for the
    /// c-chart). On-limit values of the continuous statistics are in
    /// control; the integer c-chart alarms at its threshold.
    pub fn check(&self, stat: f64) -> Decision {
        match *self {
            ChartSpec::CChart { threshold, .. } => {
                if stat >= threshold as f64 {
                    Decision::Alarm
                } else {
                    Decision::InControl
                }
            }
            _ => {
                let (lcl, ucl) = self.limits();
                let lcl = lcl.expect("two-sided chart");
                let ucl = ucl.expect("two-sided chart");
                if stat < lcl || stat > ucl {
                    Decision::Alarm
                } else {
                    Decision::InControl
                }
            }
        }
    }

    /// Fresh state with default (adaptive) moment truncation.
    pub fn init(&self) -> Result<ChartState> {
        self.init_with(Truncation::default())
    }

    /// Fresh state; `trunc` controls the in-control moment sums used to
    /// seed the AB/ABC accumulators.
    pub fn init_with(&self, trunc: Truncation) -> Result<ChartState> {
        self.validate()?;
        let accum = match self {
            ChartSpec::CChart { .. } => Accum::Raw,
            ChartSpec::Ewma { mu0, .. } => Accum::Ewma { z: *mu0 },
            ChartSpec::AbEwma { mu0, weight, .. } => {
                let m = stein_moments_poisson(weight, *mu0, trunc)?;
                if !(m.m01 > 0.0) {
                    return Err(Error::Spec("weight must give a positive B accumulator"));
                }
                Accum::Ab { a: m.m10, b: m.m01 }
            }
            ChartSpec::AbcEwma { mu0, weight, .. } => {
                let m = stein_moments_poisson(weight, *mu0, trunc)?;
                if !(m.m01 > 0.0) {
                    return Err(Error::Spec("weight must give a positive B accumulator"));
                }
                Accum::Abc {
                    a: m.m10,
                    b: m.m01,
                    c: *mu0,
                }
            }
        };
        Ok(ChartState {
            t: 0,
            accum,
            stat: self.center(),
            alarmed: false,
        })
    }

    /// Run the chart over a whole series, returning the 1-based index of
    /// the first alarm (if any) and the full trajectory.
    pub fn monitor(&self, series: &[u64]) -> Result<Monitoring> {
        if series.is_empty() {
            return Err(Error::Degenerate("empty series"));
        }
        let mut state = self.init()?;
        let mut stats = Vec::with_capacity(series.len());
        let mut first_alarm = None;
        for (i, &x) in series.iter().enumerate() {
            let stat = state.update(self, x);
            if state.alarmed() && first_alarm.is_none() {
                first_alarm = Some(i + 1);
            }
            stats.push(stat);
        }
        Ok(Monitoring { first_alarm, stats })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Accum {
    Raw,
    Ewma { z: f64 },
    Ab { a: f64, b: f64 },
    Abc { a: f64, b: f64, c: f64 },
}

/// Streaming accumulators of a single monitoring run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChartState {
    t: u64,
    accum: Accum,
    stat: f64,
    alarmed: bool,
}

impl ChartState {
    /// Process one count and return the newly plotted statistic. The
    /// alarm flag reflects this point only; monitoring may continue past
    /// alarms.
    ///
    /// Panics if `spec` is not the spec the state was initialized from.
    pub fn update(&mut self, spec: &ChartSpec, x: u64) -> f64 {
        self.t += 1;
        let stat = match (spec, &mut self.accum) {
            (ChartSpec::CChart { .. }, Accum::Raw) => x as f64,
            (ChartSpec::Ewma { lambda, .. }, Accum::Ewma { z }) => {
                *z = lambda * x as f64 + (1.0 - lambda) * *z;
                *z
            }
            (ChartSpec::AbEwma { lambda, weight, .. }, Accum::Ab { a, b }) => {
                *a = lambda * weight.xf(x) + (1.0 - lambda) * *a;
                *b = lambda * weight.f_shift(x) + (1.0 - lambda) * *b;
                *a / *b
            }
            (ChartSpec::AbcEwma { lambda, weight, .. }, Accum::Abc { a, b, c }) => {
                *a = lambda * weight.xf(x) + (1.0 - lambda) * *a;
                *b = lambda * weight.f_shift(x) + (1.0 - lambda) * *b;
                *c = lambda * x as f64 + (1.0 - lambda) * *c;
                *a / (*b * *c)
            }
            _ => panic!("chart state does not match spec"),
        };
        self.stat = stat;
        self.alarmed = spec.check(stat) == Decision::Alarm;
        stat
    }

    /// Number of points processed so far.
    pub fn t(&self) -> u64 {
        self.t
    }

    /// Currently plotted statistic (the center line before any update).
    pub fn stat(&self) -> f64 {
        self.stat
    }

    /// Whether the most recent point violated the limits.
    pub fn alarmed(&self) -> bool {
        self.alarmed
    }
}
