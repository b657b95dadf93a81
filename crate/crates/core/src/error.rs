use thiserror::Error;

/// Errors raised by model construction, series evaluation, chart setup,
/// and the Phase-I fits.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A distribution or weight parameter is outside its domain.
    #[error("parameter domain error: {0}")]
    Domain(&'static str),
    /// A chart specification that cannot be run as given.
    #[error("invalid chart spec: {0}")]
    Spec(&'static str),
    /// An adaptive series truncation could not reach its tolerance.
    #[error("series truncation did not reach tolerance within {cap} terms")]
    Truncation { cap: u32 },
    /// Input data unusable for the requested statistic.
    #[error("degenerate data: {0}")]
    Degenerate(&'static str),
    /// An iterative computation failed to converge.
    #[error("no convergence after {iterations} iterations")]
    Convergence { iterations: u32 },
}
