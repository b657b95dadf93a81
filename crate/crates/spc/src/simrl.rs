//! Monte Carlo run-length engine.
//!
//! Replications are independent work items: replication `r` of grid
//! cell `c` always consumes the substream `(seed, c, r)`, and results
//! are reduced in replication order, so a table computed on one worker
//! is bit-identical to the same table computed on eight. Re-running a
//! design with a wider limit on the same seed replays the same count
//! paths, which makes the simulated ARL a nondecreasing step function
//! of the limit (the basis for calibration by bisection).

use rayon::prelude::*;
use stein_spc_core::rng::ChaCha8Rng;
use stein_spc_core::{ChartSpec, ChartState, CountModel, Substreams};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Core(#[from] stein_spc_core::Error),
    #[error("invalid simulation setup: {0}")]
    Config(&'static str),
    #[error(
        "estimation failed: no replication alarmed ({censored} censored, {discarded} discarded)"
    )]
    Estimation { censored: u32, discarded: u32 },
    #[error("bracket [{lo}, {hi}] with ARLs [{arl_lo:.2}, {arl_hi:.2}] does not enclose target {target}")]
    Bracket {
        lo: f64,
        hi: f64,
        arl_lo: f64,
        arl_hi: f64,
        target: f64,
    },
    #[error("calibration did not converge; best L = {l}, ARL = {arl:.2}")]
    Calibration { l: f64, arl: f64 },
}

/// A change-point scenario: counts follow `in_model` for `t < tau` and
/// `out_model` from `t = tau` on. `tau = 1` is the zero-state case.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChangeScenario {
    pub in_model: CountModel,
    pub out_model: CountModel,
    pub tau: u32,
}

impl ChangeScenario {
    /// Out of control from the very first observation.
    pub fn zero_state(model: CountModel) -> Self {
        Self {
            in_model: model,
            out_model: model,
            tau: 1,
        }
    }
}

/// Monte Carlo summary of run lengths (ARL or CED, in plotted points).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunLengthStats {
    pub mean: f64,
    /// Standard error of the mean.
    pub se: f64,
    /// Replications contributing to the mean (alarmed or censored).
    pub reps_used: u32,
    /// Replications alarming before the change point (dropped).
    pub reps_discarded: u32,
    /// Replications still alarm-free at `max_t`, counted at the cap.
    pub reps_censored: u32,
    pub max_t: u32,
}

/// Outcome of a single replication.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RepOutcome {
    /// First alarm at or after the change point; the value is the number
    /// of out-of-control points up to and including the alarm.
    Alarmed(u32),
    /// No alarm within `max_t` plotted points; value as for `Alarmed`.
    Censored(u32),
    /// Alarm before the change point.
    Discarded,
}

fn run_one(
    spec: &ChartSpec,
    init: &ChartState,
    scenario: &ChangeScenario,
    rng: &mut ChaCha8Rng,
    max_t: u32,
) -> RepOutcome {
    let mut state = *init;
    for t in 1..=max_t {
        let model = if t < scenario.tau {
            &scenario.in_model
        } else {
            &scenario.out_model
        };
        let x = model.sample(rng);
        state.update(spec, x);
        if state.alarmed() {
            return if t < scenario.tau {
                RepOutcome::Discarded
            } else {
                RepOutcome::Alarmed(t - scenario.tau + 1)
            };
        }
    }
    RepOutcome::Censored(max_t - scenario.tau + 1)
}

/// Run replications `first_rep .. first_rep + count` of one scenario on
/// cell `cell`; order of the returned outcomes is the replication order.
pub fn replication_outcomes(
    spec: &ChartSpec,
    scenario: &ChangeScenario,
    first_rep: u64,
    count: u32,
    seed: u64,
    max_t: u32,
    cell: u64,
) -> Result<Vec<RepOutcome>, SimError> {
    if count == 0 {
        return Err(SimError::Config("need at least one replication"));
    }
    if scenario.tau == 0 {
        return Err(SimError::Config("change point tau must be >= 1"));
    }
    if max_t < scenario.tau {
        return Err(SimError::Config("max_t must reach the change point"));
    }
    let init = spec.init()?;
    let streams = Substreams::new(seed);
    Ok((first_rep..first_rep + u64::from(count))
        .into_par_iter()
        .map(|rep| {
            let mut rng = streams.stream(cell, rep);
            run_one(spec, &init, scenario, &mut rng, max_t)
        })
        .collect())
}

impl RunLengthStats {
    pub fn from_outcomes(outcomes: &[RepOutcome], max_t: u32) -> Result<Self, SimError> {
        let mut discarded = 0u32;
        let mut censored = 0u32;
        let mut values: Vec<f64> = Vec::with_capacity(outcomes.len());
        let mut alarmed = 0u32;
        for o in outcomes {
            match *o {
                RepOutcome::Alarmed(v) => {
                    alarmed += 1;
                    values.push(v as f64);
                }
                RepOutcome::Censored(v) => {
                    censored += 1;
                    values.push(v as f64);
                }
                RepOutcome::Discarded => discarded += 1,
            }
        }
        if alarmed == 0 {
            return Err(SimError::Estimation {
                censored,
                discarded,
            });
        }
        let used = alarmed + censored;
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let se = if values.len() > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (values.len() - 1) as f64).sqrt() / (values.len() as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            mean,
            se,
            reps_used: used,
            reps_discarded: discarded,
            reps_censored: censored,
            max_t,
        })
    }

    /// Total replications attempted.
    pub fn reps_attempted(&self) -> u32 {
        self.reps_used + self.reps_discarded
    }
}

/// Zero-state average run length: fresh chart state, the process is out
/// of control (or in control, if `model` is the in-control model) from
/// the first observation. Censored runs count at `max_t` and are
/// reported.
pub fn zero_state_arl(
    spec: &ChartSpec,
    model: &CountModel,
    reps: u32,
    seed: u64,
    max_t: u32,
) -> Result<RunLengthStats, SimError> {
    let scenario = ChangeScenario::zero_state(*model);
    let outcomes = replication_outcomes(spec, &scenario, 0, reps, seed, max_t, 0)?;
    RunLengthStats::from_outcomes(&outcomes, max_t)
}

/// Per-replication zero-state run lengths, censored at `max_t`. Useful
/// for pathwise (common-random-number) comparisons across designs.
pub fn zero_state_run_lengths(
    spec: &ChartSpec,
    model: &CountModel,
    reps: u32,
    seed: u64,
    max_t: u32,
) -> Result<Vec<u32>, SimError> {
    let scenario = ChangeScenario::zero_state(*model);
    let outcomes = replication_outcomes(spec, &scenario, 0, reps, seed, max_t, 0)?;
    Ok(outcomes
        .iter()
        .map(|o| match *o {
            RepOutcome::Alarmed(v) | RepOutcome::Censored(v) => v,
            RepOutcome::Discarded => unreachable!("tau = 1 cannot discard"),
        })
        .collect())
}

/// Conditional expected delay `CED(tau)`: replications that alarm before
/// the change point are discarded, and the replication budget is then
/// inflated by the observed discard rate (once) so that roughly `reps`
/// replications survive. With `tau = 1` this coincides with
/// [`zero_state_arl`] under identical seeding.
pub fn ced(
    spec: &ChartSpec,
    scenario: &ChangeScenario,
    reps: u32,
    seed: u64,
    max_t: u32,
) -> Result<RunLengthStats, SimError> {
    ced_on_cell(spec, scenario, reps, seed, max_t, 0)
}

fn ced_on_cell(
    spec: &ChartSpec,
    scenario: &ChangeScenario,
    reps: u32,
    seed: u64,
    max_t: u32,
    cell: u64,
) -> Result<RunLengthStats, SimError> {
    let mut outcomes = replication_outcomes(spec, scenario, 0, reps, seed, max_t, cell)?;
    let discarded = outcomes
        .iter()
        .filter(|o| matches!(o, RepOutcome::Discarded))
        .count() as u32;
    if discarded > 0 && discarded < reps {
        // top up once: ceil(reps * d / (reps - d)), capped at 9x
        let extra = (u64::from(reps) * u64::from(discarded)).div_ceil(u64::from(reps - discarded));
        let extra = extra.min(9 * u64::from(reps)) as u32;
        if extra > 0 {
            let more =
                replication_outcomes(spec, scenario, u64::from(reps), extra, seed, max_t, cell)?;
            outcomes.extend(more);
        }
    }
    RunLengthStats::from_outcomes(&outcomes, max_t)
}

/// One cell of a result grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridTask {
    pub spec: ChartSpec,
    pub scenario: ChangeScenario,
}

/// Evaluate every cell of a grid; cell `i` uses substream family `i`,
/// so the output is a deterministic function of `(tasks, reps, seed,
/// max_t)` regardless of worker count. Per-cell failures are reported
/// inline without aborting the rest.
pub fn evaluate_grid(
    tasks: &[GridTask],
    reps: u32,
    seed: u64,
    max_t: u32,
) -> Vec<Result<RunLengthStats, SimError>> {
    tasks
        .par_iter()
        .enumerate()
        .map(|(cell, task)| {
            if task.scenario.tau == 1 {
                let outcomes = replication_outcomes(
                    &task.spec,
                    &task.scenario,
                    0,
                    reps,
                    seed,
                    max_t,
                    cell as u64,
                )?;
                RunLengthStats::from_outcomes(&outcomes, max_t)
            } else {
                ced_on_cell(&task.spec, &task.scenario, reps, seed, max_t, cell as u64)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use stein_spc_core::WeightFunction;

    fn ewma2() -> ChartSpec {
        ChartSpec::Ewma {
            mu0: 2.0,
            lambda: 0.1,
            limit: 0.877,
        }
    }

    #[test]
    fn zero_state_is_deterministic() {
        let model = CountModel::poisson(2.0).unwrap();
        let a = zero_state_arl(&ewma2(), &model, 400, 7, 37_000).unwrap();
        let b = zero_state_arl(&ewma2(), &model, 400, 7, 37_000).unwrap();
        assert_eq!(a, b);
        let c = zero_state_arl(&ewma2(), &model, 400, 8, 37_000).unwrap();
        assert_ne!(a.mean.to_bits(), c.mean.to_bits());
    }

    #[test]
    fn zero_limit_alarms_immediately() {
        let spec = ChartSpec::Ewma {
            mu0: 2.5,
            lambda: 0.1,
            limit: 0.0,
        };
        let model = CountModel::poisson(2.5).unwrap();
        let stats = zero_state_arl(&spec, &model, 200, 1, 1000).unwrap();
        // non-integer center: every count moves the statistic off it
        assert_eq!(stats.mean, 1.0);
        assert_eq!(stats.reps_censored, 0);
    }

    #[test]
    fn ced_with_tau_one_matches_zero_state() {
        let model = CountModel::neg_bin(2.0, 5.0 / 3.0).unwrap();
        let scenario = ChangeScenario {
            in_model: CountModel::poisson(2.0).unwrap(),
            out_model: model,
            tau: 1,
        };
        let a = ced(&ewma2(), &scenario, 500, 3, 37_000).unwrap();
        let b = zero_state_arl(&ewma2(), &model, 500, 3, 37_000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ced_discard_rate_matches_zero_state_tail() {
        let poi = CountModel::poisson(2.0).unwrap();
        let tau = 100u32;
        let scenario = ChangeScenario {
            in_model: poi,
            out_model: poi,
            tau,
        };
        let stats = ced(&ewma2(), &scenario, 4000, 11, 37_000).unwrap();
        let rate = stats.reps_discarded as f64 / stats.reps_attempted() as f64;
        // independent estimate of P(RL < tau)
        let rls = zero_state_run_lengths(&ewma2(), &poi, 4000, 12, 37_000).unwrap();
        let p = rls.iter().filter(|&&r| r < tau).count() as f64 / rls.len() as f64;
        let se = (rate * (1.0 - rate) / stats.reps_attempted() as f64
            + p * (1.0 - p) / rls.len() as f64)
            .sqrt();
        assert!(
            (rate - p).abs() <= 3.0 * se,
            "discard rate {rate} vs tail prob {p} (se {se})"
        );
        // the top-up brings the surviving count near the request
        assert!(stats.reps_used >= 3800, "used {}", stats.reps_used);
    }

    #[test]
    fn estimation_error_when_nothing_alarms() {
        let spec = ChartSpec::Ewma {
            mu0: 2.0,
            lambda: 0.1,
            limit: 1000.0,
        };
        let model = CountModel::poisson(2.0).unwrap();
        match zero_state_arl(&spec, &model, 50, 1, 200) {
            Err(SimError::Estimation { censored, .. }) => assert_eq!(censored, 50),
            other => panic!("expected estimation error, got {other:?}"),
        }
    }

    #[test]
    fn config_errors() {
        let model = CountModel::poisson(2.0).unwrap();
        assert!(matches!(
            zero_state_arl(&ewma2(), &model, 0, 1, 100),
            Err(SimError::Config(_))
        ));
        let scenario = ChangeScenario {
            in_model: model,
            out_model: model,
            tau: 500,
        };
        assert!(matches!(
            ced(&ewma2(), &scenario, 10, 1, 100),
            Err(SimError::Config(_))
        ));
    }

    #[test]
    fn abc_runs_and_discards_are_counted() {
        let spec = ChartSpec::AbcEwma {
            mu0: 2.0,
            lambda: 0.1,
            weight: WeightFunction::AbsLinear,
            limit: 0.463,
        };
        let scenario = ChangeScenario {
            in_model: CountModel::poisson(2.0).unwrap(),
            out_model: CountModel::zip(2.0, 5.0 / 3.0).unwrap(),
            tau: 50,
        };
        let stats = ced(&spec, &scenario, 800, 5, 37_000).unwrap();
        assert!(stats.reps_discarded > 0);
        assert!(stats.mean >= 1.0);
        assert!(stats.se > 0.0);
    }

    #[test]
    fn grid_cells_use_distinct_streams_and_report_errors_inline() {
        let model = CountModel::poisson(2.0).unwrap();
        let ok = GridTask {
            spec: ewma2(),
            scenario: ChangeScenario::zero_state(model),
        };
        let broken = GridTask {
            spec: ChartSpec::Ewma {
                mu0: 2.0,
                lambda: 0.1,
                limit: 1.0e9,
            },
            scenario: ChangeScenario::zero_state(model),
        };
        let results = evaluate_grid(&[ok.clone(), broken, ok], 200, 9, 5000);
        assert!(results[0].is_ok());
        assert!(matches!(results[1], Err(SimError::Estimation { .. })));
        assert!(results[2].is_ok());
        // same task in different cells sees different substreams
        assert_ne!(results[0], results[2]);
    }

    #[test]
    fn empty_grid_is_empty() {
        assert!(evaluate_grid(&[], 100, 1, 100).is_empty());
    }
}
