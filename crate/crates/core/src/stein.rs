//! Stein–Chen weight functions and truncated moment sums.
//!
//! A count variable X is Poisson with mean mu exactly when
//! `E[X f(X)] = mu * E[f(X+1)]` holds for every bounded `f`. The
//! generalized EWMA charts smooth estimates of both sides, so this
//! module provides safe evaluation of `x*f(x)` and `f(x+1)` together
//! with their in-control moments
//!
//! ```text
//! m10 = Σ_x x f(x)   e^{-mu0} mu0^x / x!
//! m01 = Σ_x f(x+1) e^{-mu0} mu0^x / x!
//! ```
//!
//! truncated either adaptively (tail mass below a tolerance, then
//! extended until the remaining terms are lost in double rounding) or at
//! a fixed limit M.

use alloc::vec::Vec;

use crate::dist::{self, CountModel};
use crate::math;
use crate::{Error, Result};

/// Hard cap on adaptive truncation.
const TRUNCATION_CAP: u32 = 100_000;

/// Term contributions below `EPS_TERM * (1 + |sum|)` are considered
/// converged at double precision.
const EPS_TERM: f64 = 1e-16;

/// A tabulated weight on `{0, ..., M}`; lookups past `M` extend with the
/// last value.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedWeight {
    values: Vec<f64>,
}

impl TabulatedWeight {
    /// Values must be finite and nonnegative, with `f` not identically
    /// zero on the positive counts (including the extension).
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("tabulated weight needs at least one value"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Domain(
                "tabulated weight values must be finite and nonnegative",
            ));
        }
        let positive_part_nonzero = if values.len() == 1 {
            values[0] > 0.0
        } else {
            values[1..].iter().any(|v| *v > 0.0)
        };
        if !positive_part_nonzero {
            return Err(Error::Domain(
                "tabulated weight must not vanish on all positive counts",
            ));
        }
        Ok(Self { values })
    }

    fn value(&self, x: u64) -> f64 {
        let i = (x as usize).min(self.values.len() - 1);
        self.values[i]
    }
}

/// Weight function `f` in the Stein–Chen identity.
///
/// `ConstantOne` reduces the AB-EWMA chart to the ordinary EWMA chart;
/// `AbsLinear` (`|x−1|`) targets regular overdispersion, `AbsRoot`
/// (`|x−1|^{1/4}`) and `Log` (`ln x`, with `0·ln 0 = 0`) target zero
/// inflation.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightFunction {
    ConstantOne,
    AbsLinear,
    AbsRoot,
    Log,
    Table(TabulatedWeight),
}

impl WeightFunction {
    /// `x · f(x)`, with the convention `0 · ln(0) = 0` for the log weight.
    pub fn xf(&self, x: u64) -> f64 {
        match self {
            WeightFunction::ConstantOne => x as f64,
            WeightFunction::AbsLinear => x as f64 * x.abs_diff(1) as f64,
            WeightFunction::AbsRoot => x as f64 * math::powf(x.abs_diff(1) as f64, 0.25),
            WeightFunction::Log => {
                if x == 0 {
                    0.0
                } else {
                    x as f64 * math::ln(x as f64)
                }
            }
            WeightFunction::Table(t) => x as f64 * t.value(x),
        }
    }

    /// `f(x + 1)`; finite for every count (the log weight never sees 0).
    pub fn f_shift(&self, x: u64) -> f64 {
        match self {
            WeightFunction::ConstantOne => 1.0,
            WeightFunction::AbsLinear => x as f64,
            WeightFunction::AbsRoot => math::powf(x as f64, 0.25),
            WeightFunction::Log => math::ln((x + 1) as f64),
            WeightFunction::Table(t) => t.value(x + 1),
        }
    }
}

/// Truncation rule for the moment sums.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Truncation {
    /// Stop once the tail mass above M drops below the tolerance (and
    /// further terms no longer move the sums at double precision).
    Adaptive(f64),
    /// Sum exactly the terms `x = 0, ..., M`.
    Fixed(u32),
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::Adaptive(1e-10)
    }
}

/// In-control moments of a weight under `Poi(mu0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteinMoments {
    /// `E[X f(X)]`
    pub m10: f64,
    /// `E[f(X+1)]`
    pub m01: f64,
    pub mu0: f64,
    /// Truncation limit actually used.
    pub truncation_m: u32,
}

/// Moments `(m10, m01)` of `f` under the in-control Poisson.
pub fn stein_moments_poisson(
    f: &WeightFunction,
    mu0: f64,
    trunc: Truncation,
) -> Result<SteinMoments> {
    if !(mu0 > 0.0) || !mu0.is_finite() {
        return Err(Error::Domain("mu0 must be positive and finite"));
    }
    let (m10, m01, m) = weighted_sums(f, |x| dist::poisson_pmf(mu0, x), mu0, trunc)?;
    Ok(SteinMoments {
        m10,
        m01,
        mu0,
        truncation_m: m,
    })
}

/// `E[X f(X)] − mu · E[f(X+1)]` under the given model.
///
/// Zero (up to truncation error) exactly when the model is Poisson; for
/// the `|x−1|` weight it reduces to `variance − mean = (disp − 1)·mu`
/// for any count distribution.
pub fn stein_residual(f: &WeightFunction, model: &CountModel, trunc: Truncation) -> Result<f64> {
    let (m10, m01, _) = weighted_sums(f, |x| model.pmf(x), model.mean(), trunc)?;
    Ok(m10 - model.mean() * m01)
}

fn weighted_sums(
    f: &WeightFunction,
    pmf: impl Fn(u64) -> f64,
    mean_hint: f64,
    trunc: Truncation,
) -> Result<(f64, f64, u32)> {
    let mut m10 = 0.0;
    let mut m01 = 0.0;
    match trunc {
        Truncation::Fixed(m) => {
            for x in 0..=u64::from(m) {
                let w = pmf(x);
                m10 += f.xf(x) * w;
                m01 += f.f_shift(x) * w;
            }
            Ok((m10, m01, m))
        }
        Truncation::Adaptive(tol) => {
            if !(tol > 0.0) {
                return Err(Error::Domain("tail tolerance must be positive"));
            }
            let mut mass = 0.0;
            for x in 0..u64::from(TRUNCATION_CAP) {
                let w = pmf(x);
                let t10 = f.xf(x) * w;
                let t01 = f.f_shift(x) * w;
                m10 += t10;
                m01 += t01;
                mass += w;
                let past_bulk = x as f64 >= mean_hint;
                let tail_ok = 1.0 - mass <= tol;
                let settled = math::abs(t10) <= EPS_TERM * (1.0 + math::abs(m10))
                    && math::abs(t01) <= EPS_TERM * (1.0 + math::abs(m01));
                if past_bulk && tail_ok && settled {
                    return Ok((m10, m01, x as u32));
                }
            }
            Err(Error::Truncation {
                cap: TRUNCATION_CAP,
            })
        }
    }
}
