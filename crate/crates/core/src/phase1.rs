//! Phase-I estimation and diagnostics.
//!
//! Before a chart goes live, the in-control model is identified from
//! historical counts: the Poisson mean estimate, a one-sided
//! dispersion-index test against overdispersion (`(T₀−1)·Î` is
//! approximately chi-square with `T₀−1` degrees of freedom under the
//! Poisson null), sample autocorrelations against the usual
//! `±1.96/√T₀` bounds, and a maximum-likelihood zero-inflated-Poisson
//! fit for when the Poisson is rejected.

use alloc::vec::Vec;

use crate::math;
use crate::special::{chi_square_sf, ln_gamma};
use crate::{Error, Result};

const EM_MAX_ITER: u32 = 10_000;
const EM_TOL: f64 = 1e-10;

/// One sample autocorrelation with its significance bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AcfLag {
    pub lag: u32,
    pub value: f64,
    /// `1.96 / sqrt(T0)`.
    pub bound: f64,
}

impl AcfLag {
    pub fn significant(&self) -> bool {
        math::abs(self.value) > self.bound
    }
}

/// Maximum-likelihood zero-inflated-Poisson fit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZipFit {
    pub omega: f64,
    pub lambda: f64,
    pub loglik: f64,
    pub iterations: u32,
}

/// Bundle of Phase-I diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct Phase1Report {
    pub t0: usize,
    pub mean: f64,
    pub disp_hat: f64,
    pub disp_pvalue: f64,
    pub acf: Vec<AcfLag>,
    pub zip_fit: Option<ZipFit>,
}

/// Sample mean — the Poisson maximum-likelihood estimate.
pub fn fit_poisson(data: &[u64]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Degenerate("empty data"));
    }
    Ok(data.iter().map(|&x| x as f64).sum::<f64>() / data.len() as f64)
}

/// Dispersion-index test of `I = 1` against `I > 1` (overdispersion).
///
/// Returns `(Î, p)` with `Î = S²/X̄` (variance divisor `T₀−1`) and
/// `p = P(χ²_{T₀−1} ≥ (T₀−1)·Î)`.
pub fn dispersion_test(data: &[u64]) -> Result<(f64, f64)> {
    if data.len() < 2 {
        return Err(Error::Degenerate("need at least two observations"));
    }
    let n = data.len() as f64;
    let mean = fit_poisson(data)?;
    if mean == 0.0 {
        return Err(Error::Degenerate("all observations are zero"));
    }
    let ss: f64 = data
        .iter()
        .map(|&x| {
            let d = x as f64 - mean;
            d * d
        })
        .sum();
    let disp_hat = ss / (n - 1.0) / mean;
    let p = chi_square_sf(n - 1.0, (n - 1.0) * disp_hat)?;
    Ok((disp_hat, p))
}

/// Sample autocorrelations for lags `1..=max_lag` with the `±1.96/√T₀`
/// significance bound.
pub fn acf(data: &[u64], max_lag: u32) -> Result<Vec<AcfLag>> {
    let n = data.len();
    if n as u64 <= u64::from(max_lag) {
        return Err(Error::Degenerate("series shorter than max_lag"));
    }
    let mean = fit_poisson(data)?;
    let denom: f64 = data
        .iter()
        .map(|&x| {
            let d = x as f64 - mean;
            d * d
        })
        .sum();
    if denom == 0.0 {
        return Err(Error::Degenerate("constant series has no autocorrelation"));
    }
    let bound = 1.96 / math::sqrt(n as f64);
    let mut out = Vec::with_capacity(max_lag as usize);
    for lag in 1..=max_lag {
        let k = lag as usize;
        let num: f64 = (0..n - k)
            .map(|t| (data[t] as f64 - mean) * (data[t + k] as f64 - mean))
            .sum();
        out.push(AcfLag {
            lag,
            value: num / denom,
            bound,
        });
    }
    Ok(out)
}

/// Zero-inflated-Poisson maximum likelihood via EM.
///
/// `omega` starts at the excess-zero moment estimate; each E-step
/// attributes the observed zeros to the point mass, each M-step refits
/// `(omega, lambda)` in closed form. The log-likelihood ascends
/// monotonically; iteration stops when it moves by less than `1e-10`.
/// Data without zeros short-circuit to the boundary `omega = 0` with the
/// plain Poisson MLE.
pub fn fit_zip_ml(data: &[u64]) -> Result<ZipFit> {
    if data.len() < 2 {
        return Err(Error::Degenerate("need at least two observations"));
    }
    let n = data.len() as f64;
    let n0 = data.iter().filter(|&&x| x == 0).count() as f64;
    let sum_x: f64 = data.iter().map(|&x| x as f64).sum();
    if sum_x == 0.0 {
        return Err(Error::Degenerate("all observations are zero"));
    }
    // Σ ln(x!) over the nonzero part; constant in the likelihood.
    let sum_ln_fact: f64 = data
        .iter()
        .filter(|&&x| x > 0)
        .map(|&x| ln_gamma(x as f64 + 1.0))
        .sum();
    let loglik = |omega: f64, lambda: f64| -> f64 {
        let p0 = omega + (1.0 - omega) * math::exp(-lambda);
        n0 * math::ln(p0) + (n - n0) * (math::ln(1.0 - omega) - lambda) + sum_x * math::ln(lambda)
            - sum_ln_fact
    };

    let mean = sum_x / n;
    if n0 == 0.0 {
        return Ok(ZipFit {
            omega: 0.0,
            lambda: mean,
            loglik: loglik(0.0, mean),
            iterations: 0,
        });
    }

    // excess-zero moment start
    let p0_hat = n0 / n;
    let p0_poi = math::exp(-mean);
    let mut omega = ((p0_hat - p0_poi) / (1.0 - p0_poi)).clamp(0.0, 1.0 - 1e-9);
    let mut lambda = mean / (1.0 - omega);
    let mut ll = loglik(omega, lambda);
    for iter in 1..=EM_MAX_ITER {
        // E-step: posterior probability that an observed zero is structural
        let z = if omega > 0.0 {
            omega / (omega + (1.0 - omega) * math::exp(-lambda))
        } else {
            0.0
        };
        // M-step
        let structural = n0 * z;
        omega = structural / n;
        lambda = sum_x / (n - structural);
        let ll_new = loglik(omega, lambda);
        debug_assert!(
            ll_new >= ll - 1e-8,
            "EM log-likelihood decreased: {ll} -> {ll_new}"
        );
        let done = math::abs(ll_new - ll) < EM_TOL;
        ll = ll_new;
        if done {
            return Ok(ZipFit {
                omega,
                lambda,
                loglik: ll,
                iterations: iter,
            });
        }
    }
    Err(Error::Convergence {
        iterations: EM_MAX_ITER,
    })
}

/// Full Phase-I diagnostics bundle.
pub fn phase1_report(data: &[u64], max_lag: u32) -> Result<Phase1Report> {
    let mean = fit_poisson(data)?;
    let (disp_hat, disp_pvalue) = dispersion_test(data)?;
    let lags = max_lag.min(data.len().saturating_sub(1) as u32);
    let acf = acf(data, lags)?;
    let zip_fit = fit_zip_ml(data).ok();
    Ok(Phase1Report {
        t0: data.len(),
        mean,
        disp_hat,
        disp_pvalue,
        acf,
        zip_fit,
    })
}
