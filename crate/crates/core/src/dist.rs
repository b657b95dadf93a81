//! Count distributions parametrized by mean and dispersion index.
//!
//! All three families are pinned down by the pair `(mu, disp)` with
//! `disp = variance / mean`: Poisson has `disp = 1`, the negative
//! binomial and the zero-inflated Poisson both model overdispersion
//! (`disp > 1`) — the NB by flattening the PMF, the ZIP by an extra
//! point mass at zero. Internal parameters are always derived from
//! `(mu, disp)`, never stored separately.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::math;
use crate::special::ln_gamma;
use crate::{Error, Result};

/// Distribution family of a [`CountModel`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Poisson,
    NegBin,
    Zip,
}

/// A count distribution with mean `mu` and dispersion index `disp`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CountModel {
    family: Family,
    mu: f64,
    disp: f64,
}

/// Negative-binomial internal parameters `(n, p)` for given mean and
/// dispersion index: `p = 1/disp`, `n = mu/(disp − 1)`, so that the PMF
/// `Γ(n+x)/(Γ(n) x!) pⁿ (1−p)ˣ` has mean `mu` and variance `disp·mu`.
pub fn nb_params(mu: f64, disp: f64) -> Result<(f64, f64)> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::Domain("mean must be positive and finite"));
    }
    if !(disp > 1.0) || !disp.is_finite() {
        return Err(Error::Domain(
            "negative binomial requires dispersion index > 1",
        ));
    }
    Ok((mu / (disp - 1.0), 1.0 / disp))
}

/// Zero-inflated-Poisson internal parameters `(omega, lambda)` for given
/// mean and dispersion index: `lambda = mu + disp − 1`,
/// `omega = (disp − 1)/lambda`. `disp = 1` degenerates to a plain
/// Poisson (`omega = 0`).
pub fn zip_params(mu: f64, disp: f64) -> Result<(f64, f64)> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::Domain("mean must be positive and finite"));
    }
    if !(disp >= 1.0) || !disp.is_finite() {
        return Err(Error::Domain(
            "zero-inflated Poisson requires dispersion index >= 1",
        ));
    }
    let lambda = mu + disp - 1.0;
    Ok(((disp - 1.0) / lambda, lambda))
}

impl CountModel {
    /// Poisson with mean `mu` (dispersion index 1).
    pub fn poisson(mu: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::Domain("mean must be positive and finite"));
        }
        Ok(Self {
            family: Family::Poisson,
            mu,
            disp: 1.0,
        })
    }

    /// Negative binomial with mean `mu` and dispersion index `disp > 1`.
    pub fn neg_bin(mu: f64, disp: f64) -> Result<Self> {
        nb_params(mu, disp)?;
        Ok(Self {
            family: Family::NegBin,
            mu,
            disp,
        })
    }

    /// Zero-inflated Poisson with mean `mu` and dispersion index
    /// `disp ≥ 1`; `disp = 1` is the degenerate Poisson boundary.
    pub fn zip(mu: f64, disp: f64) -> Result<Self> {
        zip_params(mu, disp)?;
        Ok(Self {
            family: Family::Zip,
            mu,
            disp,
        })
    }

    pub fn new(family: Family, mu: f64, disp: f64) -> Result<Self> {
        match family {
            Family::Poisson => {
                if disp != 1.0 {
                    return Err(Error::Domain("Poisson requires dispersion index = 1"));
                }
                Self::poisson(mu)
            }
            Family::NegBin => Self::neg_bin(mu, disp),
            Family::Zip => Self::zip(mu, disp),
        }
    }

    /// Same family and dispersion index at a different mean.
    pub fn with_mean(&self, mu: f64) -> Result<Self> {
        Self::new(self.family, mu, self.disp)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn mean(&self) -> f64 {
        self.mu
    }

    pub fn dispersion(&self) -> f64 {
        self.disp
    }

    /// Exact `(mean, variance)`.
    pub fn moments(&self) -> (f64, f64) {
        (self.mu, self.disp * self.mu)
    }

    /// `P(X = x)`.
    pub fn pmf(&self, x: u64) -> f64 {
        match self.family {
            Family::Poisson => poisson_pmf(self.mu, x),
            Family::NegBin => {
                let (n, p) = nb_params(self.mu, self.disp).expect("validated at construction");
                let xf = x as f64;
                math::exp(
                    ln_gamma(n + xf) - ln_gamma(n) - ln_gamma(xf + 1.0)
                        + n * math::ln(p)
                        + xf * math::ln(1.0 - p),
                )
            }
            Family::Zip => {
                let (omega, lambda) =
                    zip_params(self.mu, self.disp).expect("validated at construction");
                if x == 0 {
                    omega + (1.0 - omega) * poisson_pmf(lambda, 0)
                } else {
                    (1.0 - omega) * poisson_pmf(lambda, x)
                }
            }
        }
    }

    /// Draw one count. Deterministic given the stream state; the NB is
    /// sampled exactly as a gamma–Poisson mixture and the ZIP as a
    /// Bernoulli mixture of a point mass at zero and a Poisson branch.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self.family {
            Family::Poisson => sample_poisson(rng, self.mu),
            Family::NegBin => {
                let (n, p) = nb_params(self.mu, self.disp).expect("validated at construction");
                let scale = (1.0 - p) / p;
                let lambda = Gamma::new(n, scale)
                    .expect("shape and scale are positive")
                    .sample(rng);
                sample_poisson(rng, lambda)
            }
            Family::Zip => {
                let (omega, lambda) =
                    zip_params(self.mu, self.disp).expect("validated at construction");
                if omega > 0.0 && rng.random_bool(omega) {
                    0
                } else {
                    sample_poisson(rng, lambda)
                }
            }
        }
    }
}

pub(crate) fn poisson_pmf(lambda: f64, x: u64) -> f64 {
    let xf = x as f64;
    math::exp(xf * math::ln(lambda) - lambda - ln_gamma(xf + 1.0))
}

/// Exact Poisson sampler: sequential-search inversion on one uniform per
/// chunk. Means above `CHUNK` split additively (a Poisson sum of
/// independent Poissons), so `e^{-lambda}` never underflows.
fn sample_poisson<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> u64 {
    const CHUNK: f64 = 30.0;
    let mut remaining = lambda;
    let mut total = 0u64;
    while remaining > CHUNK {
        total += poisson_inversion(rng, CHUNK);
        remaining -= CHUNK;
    }
    total + poisson_inversion(rng, remaining)
}

fn poisson_inversion<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    let u: f64 = rng.random();
    let mut term = math::exp(-lambda);
    let mut cdf = term;
    let mut k = 0u64;
    while u >= cdf {
        k += 1;
        term *= lambda / k as f64;
        cdf += term;
        // u may sit in the rounding dust past the representable tail
        if term < 1e-250 && k as f64 > lambda {
            break;
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Substreams;

    fn assert_close(actual: f64, expected: f64, tol: f64) {
        assert!(
            (actual - expected).abs() <= tol,
            "actual {actual}, expected {expected}"
        );
    }

    /// Truncated-summation oracle: mean and variance straight from the PMF.
    fn pmf_moments(model: &CountModel, m: u64) -> (f64, f64, f64) {
        let (mut mass, mut mean, mut sq) = (0.0, 0.0, 0.0);
        for x in 0..=m {
            let p = model.pmf(x);
            mass += p;
            mean += x as f64 * p;
            sq += (x as f64) * (x as f64) * p;
        }
        (mass, mean, sq - mean * mean)
    }

    #[test]
    fn nb_params_closed_form() {
        let (n, p) = nb_params(2.0, 5.0 / 3.0).unwrap();
        assert_close(n, 3.0, 1e-12);
        assert_close(p, 0.6, 1e-12);
        let (n, p) = nb_params(5.0, 5.0 / 3.0).unwrap();
        assert_close(n, 7.5, 1e-12);
        assert_close(p, 0.6, 1e-12);
        assert!(matches!(nb_params(2.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn nb_moments_by_summation() {
        for &(mu, disp) in &[(2.0, 5.0 / 3.0), (5.0, 5.0 / 3.0)] {
            let m = CountModel::neg_bin(mu, disp).unwrap();
            let (mass, mean, var) = pmf_moments(&m, 400);
            assert_close(mass, 1.0, 1e-10);
            assert_close(mean, mu, 1e-9);
            assert_close(var, disp * mu, 1e-8);
        }
    }

    #[test]
    fn zip_params_closed_form() {
        let (omega, lambda) = zip_params(2.0, 5.0 / 3.0).unwrap();
        assert_close(omega, 0.25, 1e-12);
        assert_close(lambda, 8.0 / 3.0, 1e-12);
        let (omega, lambda) = zip_params(5.0, 5.0 / 3.0).unwrap();
        assert_close(omega, 2.0 / 17.0, 1e-12);
        assert_close(lambda, 17.0 / 3.0, 1e-12);
        // dispersion 1 vanishes into a plain Poisson
        let (omega, lambda) = zip_params(2.0, 1.0).unwrap();
        assert_eq!(omega, 0.0);
        assert_eq!(lambda, 2.0);
        assert!(matches!(zip_params(2.0, 0.99), Err(Error::Domain(_))));
    }

    #[test]
    fn zip_moments_by_summation() {
        for &(mu, disp) in &[(2.0, 5.0 / 3.0), (5.0, 5.0 / 3.0)] {
            let m = CountModel::zip(mu, disp).unwrap();
            let (mass, mean, var) = pmf_moments(&m, 200);
            assert_close(mass, 1.0, 1e-12);
            assert_close(mean, mu, 1e-10);
            assert_close(var, disp * mu, 1e-9);
        }
    }

    #[test]
    fn pmf_values() {
        let poi = CountModel::poisson(2.0).unwrap();
        assert_close(poi.pmf(0), (-2.0f64).exp(), 1e-15);
        let nb = CountModel::neg_bin(2.0, 5.0 / 3.0).unwrap();
        assert_close(nb.pmf(0), 0.6f64.powi(3), 1e-14);
        let zip = CountModel::zip(2.0, 5.0 / 3.0).unwrap();
        // frozen from 0.25 + 0.75 e^{-8/3}
        assert_close(zip.pmf(0), 0.30211258841710115, 1e-15);
    }

    #[test]
    fn zip_at_unit_dispersion_is_poisson_exactly() {
        let zip = CountModel::zip(3.25, 1.0).unwrap();
        let poi = CountModel::poisson(3.25).unwrap();
        for x in 0..64 {
            assert_eq!(zip.pmf(x).to_bits(), poi.pmf(x).to_bits());
        }
    }

    #[test]
    fn moments_recovered_from_internal_params() {
        for &(mu, disp) in &[(0.5, 1.2), (2.0, 5.0 / 3.0), (5.0, 3.0), (10.0, 1.01)] {
            let (n, p) = nb_params(mu, disp).unwrap();
            let mean = n * (1.0 - p) / p;
            let var = n * (1.0 - p) / (p * p);
            assert!((mean - mu).abs() <= 1e-12 * mu);
            assert!((var - disp * mu).abs() <= 1e-12 * disp * mu);

            let (omega, lambda) = zip_params(mu, disp).unwrap();
            let mean = (1.0 - omega) * lambda;
            let var = mean * (1.0 + omega * lambda);
            assert!((mean - mu).abs() <= 1e-12 * mu);
            assert!((var - disp * mu).abs() <= 1e-12 * disp * mu);
        }
    }

    #[test]
    fn pmf_mass_reaches_one() {
        for model in [
            CountModel::poisson(2.0).unwrap(),
            CountModel::neg_bin(2.0, 5.0 / 3.0).unwrap(),
            CountModel::zip(5.0, 5.0 / 3.0).unwrap(),
        ] {
            let (mass, _, _) = pmf_moments(&model, 400);
            assert!(mass >= 1.0 - 1e-10, "mass {mass}");
            assert!((0..=400).all(|x| model.pmf(x) >= 0.0));
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let streams = Substreams::new(99);
        for model in [
            CountModel::poisson(2.0).unwrap(),
            CountModel::neg_bin(2.0, 5.0 / 3.0).unwrap(),
            CountModel::zip(5.0, 5.0 / 3.0).unwrap(),
        ] {
            let mut a = streams.stream(0, 0);
            let mut b = streams.stream(0, 0);
            let da: Vec<u64> = (0..200).map(|_| model.sample(&mut a)).collect();
            let db: Vec<u64> = (0..200).map(|_| model.sample(&mut b)).collect();
            assert_eq!(da, db);
        }
    }

    #[test]
    fn poisson_sample_mean_clt() {
        let mut rng = Substreams::new(11).stream(0, 0);
        let model = CountModel::poisson(2.0).unwrap();
        let n = 1_000_000u64;
        let sum: u64 = (0..n).map(|_| model.sample(&mut rng)).sum();
        let mean = sum as f64 / n as f64;
        assert!((mean - 2.0).abs() < 0.005, "mean {mean}");
    }

    #[test]
    fn neg_bin_sample_variance_clt() {
        let mut rng = Substreams::new(12).stream(0, 0);
        let model = CountModel::neg_bin(2.0, 5.0 / 3.0).unwrap();
        let n = 1_000_000usize;
        let draws: Vec<f64> = (0..n).map(|_| model.sample(&mut rng) as f64).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1) as f64;
        // 3*SE of the sample variance, from the NB fourth central moment
        // 58.889 (summation oracle): sqrt((m4 - var^2)/n) ~ 0.0069
        assert!((var - 10.0 / 3.0).abs() < 0.0208, "var {var}");
    }

    #[test]
    fn large_mean_sampling_stays_sane() {
        let mut rng = Substreams::new(13).stream(0, 0);
        let model = CountModel::poisson(150.0).unwrap();
        let n = 20_000u64;
        let sum: u64 = (0..n).map(|_| model.sample(&mut rng)).sum();
        let mean = sum as f64 / n as f64;
        // 3*SE = 3*sqrt(150/20000) ~ 0.26
        assert!((mean - 150.0).abs() < 0.3, "mean {mean}");
    }

    /// Chi-square goodness of fit of the sampler against the PMF,
    /// tail-binned so every expected count is at least five.
    #[test]
    fn sampler_matches_pmf_chi_square() {
        let n = 100_000u64;
        for (seed, model) in [
            (21, CountModel::poisson(2.0).unwrap()),
            (22, CountModel::neg_bin(2.0, 5.0 / 3.0).unwrap()),
            (23, CountModel::zip(5.0, 5.0 / 3.0).unwrap()),
        ] {
            let mut rng = Substreams::new(seed).stream(0, 0);
            let mut counts = alloc::vec![0u64; 64];
            for _ in 0..n {
                let x = model.sample(&mut rng) as usize;
                counts[x.min(63)] += 1;
            }
            // find the tail cut: last bin with expected >= 5
            let expected: Vec<f64> = (0..64u64).map(|x| model.pmf(x) * n as f64).collect();
            let mut cut = 63;
            let mut tail_exp = 0.0;
            for x in (0..64).rev() {
                tail_exp += expected[x];
                if tail_exp >= 5.0 {
                    cut = x;
                    break;
                }
            }
            let mut chi2 = 0.0;
            let mut bins = 0u32;
            let mut tail_obs = 0.0;
            let mut tail_e = 0.0;
            for x in 0..64 {
                if x < cut {
                    chi2 += (counts[x] as f64 - expected[x]).powi(2) / expected[x];
                    bins += 1;
                } else {
                    tail_obs += counts[x] as f64;
                    tail_e += expected[x];
                }
            }
            // account for the residual tail mass beyond the bin range
            tail_e += (1.0 - expected.iter().sum::<f64>() / n as f64).max(0.0) * n as f64;
            chi2 += (tail_obs - tail_e).powi(2) / tail_e;
            bins += 1;
            let p = crate::special::chi_square_sf((bins - 1) as f64, chi2).unwrap();
            assert!(p > 0.001, "chi2 {chi2} with {bins} bins: p = {p}");
        }
    }
}
