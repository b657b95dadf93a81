//! Control-limit calibration.
//!
//! [`find_l`] searches the limit half-width `L` whose simulated
//! in-control ARL hits a target. Every trial `L` replays the same
//! per-replication substreams, so the simulated ARL is an exact
//! nondecreasing step function of `L` and plain bisection converges on
//! it. [`c_chart_design`] needs no simulation: the c-chart's ARL is
//! `1 / P(X ≥ k)` in closed form, and because `k` is an integer only a
//! discrete set of ARLs is achievable.

use stein_spc_core::special::poisson_sf;
use stein_spc_core::{ChartSpec, CountModel};

use crate::simrl::{zero_state_arl, SimError};

const MAX_BISECTION_ITER: u32 = 64;
const MIN_BRACKET_WIDTH: f64 = 1e-4;
const WIDEN_STEPS: u32 = 6;

/// Result of a control-limit search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Calibration {
    pub l: f64,
    pub achieved_arl: f64,
    /// Monte Carlo standard error of the achieved ARL.
    pub se: f64,
    /// Simulated ARL evaluations spent.
    pub evaluations: u32,
}

/// Find the limit half-width whose zero-state in-control ARL is close to
/// `target_arl`, by bisection under common random numbers.
///
/// `template` supplies the chart kind, smoothing, weight, and in-control
/// mean; its limit field is ignored. `bracket` may be omitted, in which
/// case a default derived from the asymptotic EWMA standard deviation is
/// used and widened automatically if it does not enclose the target.
/// The search stops once the bracket's ARL spread is within `rel_tol`
/// of the target (default 0.01) or the bracket is narrower than `1e-4`.
pub fn find_l(
    template: &ChartSpec,
    model0: &CountModel,
    target_arl: f64,
    reps: u32,
    seed: u64,
    bracket: Option<(f64, f64)>,
    rel_tol: f64,
) -> Result<Calibration, SimError> {
    if matches!(template, ChartSpec::CChart { .. }) {
        return Err(SimError::Config(
            "the c-chart is designed analytically; see c_chart_design",
        ));
    }
    if !(target_arl > 1.0) {
        return Err(SimError::Config("target ARL must exceed 1"));
    }
    if !(rel_tol > 0.0) {
        return Err(SimError::Config("rel_tol must be positive"));
    }
    let max_t = (100.0 * target_arl).ceil() as u32;
    let mut evaluations = 0u32;
    let mut eval = |l: f64| -> Result<(f64, f64), SimError> {
        evaluations += 1;
        // a fully censored evaluation just means the limit is far too
        // wide: treat its ARL as the cap
        match zero_state_arl(&template.with_limit(l), model0, reps, seed, max_t) {
            Ok(stats) => Ok((stats.mean, stats.se)),
            Err(SimError::Estimation { .. }) => Ok((max_t as f64, 0.0)),
            Err(e) => Err(e),
        }
    };

    let user_bracket = bracket.is_some();
    let (mut lo, mut hi) = bracket.unwrap_or_else(|| default_bracket(template));
    if !(lo >= 0.0 && hi > lo) {
        return Err(SimError::Config("bracket must satisfy 0 <= lo < hi"));
    }
    let (mut arl_lo, _) = eval(lo)?;
    let (mut arl_hi, _) = eval(hi)?;
    if !user_bracket {
        let mut widen = 0;
        while arl_hi <= target_arl && widen < WIDEN_STEPS {
            hi *= 2.0;
            arl_hi = eval(hi)?.0;
            widen += 1;
        }
    }
    if !(arl_lo < target_arl && target_arl < arl_hi) {
        return Err(SimError::Bracket {
            lo,
            hi,
            arl_lo,
            arl_hi,
            target: target_arl,
        });
    }

    let mut iterations = 0u32;
    while arl_hi - arl_lo > rel_tol * target_arl && hi - lo >= MIN_BRACKET_WIDTH {
        if iterations >= MAX_BISECTION_ITER {
            let l = 0.5 * (lo + hi);
            let arl = if target_arl - arl_lo <= arl_hi - target_arl {
                arl_lo
            } else {
                arl_hi
            };
            return Err(SimError::Calibration { l, arl });
        }
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let (arl_mid, _) = eval(mid)?;
        if arl_mid < target_arl {
            lo = mid;
            arl_lo = arl_mid;
        } else {
            hi = mid;
            arl_hi = arl_mid;
        }
    }

    let l = 0.5 * (lo + hi);
    let (achieved_arl, se) = eval(l)?;
    Ok(Calibration {
        l,
        achieved_arl,
        se,
        evaluations,
    })
}

/// Bracket upper end from the asymptotic EWMA standard deviation
/// `sqrt(lambda / (2 - lambda)) * sqrt(mu0)`, times 15 (five 3-sigma
/// widths); the ABC statistic lives on the ratio scale around 1, so its
/// bracket drops the `sqrt(mu0)` factor.
fn default_bracket(template: &ChartSpec) -> (f64, f64) {
    let lambda = template.lambda().unwrap_or(1.0);
    let sigma = (lambda / (2.0 - lambda)).sqrt();
    let hi = match template {
        ChartSpec::AbcEwma { .. } => 15.0 * sigma,
        _ => 15.0 * sigma * template.mu0().sqrt(),
    };
    (0.0, hi)
}

/// Analytic c-chart design.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CChartDesign {
    /// Chosen alarm threshold (counts `>= threshold` alarm).
    pub threshold: u64,
    /// `1 / P(X >= threshold)` under `Poi(mu0)`.
    pub achieved_arl: f64,
    /// Nearest design below the target (threshold, ARL).
    pub below: (u64, f64),
    /// Nearest design above the target (threshold, ARL).
    pub above: (u64, f64),
}

/// Pick the alarm threshold whose analytic in-control ARL is closest to
/// the target. Thresholds are integers, so the target is usually not
/// attainable; both neighboring designs are reported.
pub fn c_chart_design(mu0: f64, target_arl: f64) -> Result<CChartDesign, stein_spc_core::Error> {
    if !(target_arl >= 1.0) {
        return Err(stein_spc_core::Error::Domain("target ARL must be >= 1"));
    }
    let arl_at = |k: u64| -> Result<f64, stein_spc_core::Error> {
        let tail = poisson_sf(mu0, k)?;
        Ok(if tail > 0.0 {
            1.0 / tail
        } else {
            f64::INFINITY
        })
    };
    // ARL(k) grows in k; find the first threshold at or above target
    let mut k_over = 1u64;
    let mut arl_over = arl_at(k_over)?;
    while arl_over < target_arl {
        k_over += 1;
        arl_over = arl_at(k_over)?;
    }
    let (k_under, arl_under) = if k_over == 1 {
        (0, 1.0)
    } else {
        (k_over - 1, arl_at(k_over - 1)?)
    };
    let (threshold, achieved_arl) =
        if target_arl - arl_under <= arl_over - target_arl || arl_over.is_infinite() {
            (k_under, arl_under)
        } else {
            (k_over, arl_over)
        };
    Ok(CChartDesign {
        threshold,
        achieved_arl,
        below: (k_under, arl_under),
        above: (k_over, arl_over),
    })
}
