//! Pre-calibrated chart designs and the benchmark evaluation grids.
//!
//! The limit half-widths below were calibrated by [`crate::find_l`]
//! (10^4-replication search, smoothing 0.1) so that each chart's
//! zero-state in-control ARL is close to 370 for the given in-control
//! mean. They let the benchmark grids run without re-calibrating, and
//! `find_l` reproduces them from scratch within Monte Carlo noise.

use stein_spc_core::{ChartSpec, CountModel, WeightFunction};

use crate::simrl::{ChangeScenario, GridTask};

pub const DEFAULT_LAMBDA: f64 = 0.10;
pub const DEFAULT_TARGET_ARL: f64 = 370.0;
pub const DEFAULT_SEED: u64 = 42;

/// Chart family of a tuned design.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChartFamily {
    Ewma,
    AbEwma,
    AbcEwma,
}

impl ChartFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ChartFamily::Ewma => "ewma",
            ChartFamily::AbEwma => "ab",
            ChartFamily::AbcEwma => "abc",
        }
    }
}

/// Built-in weight selector (mirrors `WeightFunction` minus the table).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightKind {
    One,
    AbsLinear,
    AbsRoot,
    Log,
}

impl WeightKind {
    pub fn to_weight(self) -> WeightFunction {
        match self {
            WeightKind::One => WeightFunction::ConstantOne,
            WeightKind::AbsLinear => WeightFunction::AbsLinear,
            WeightKind::AbsRoot => WeightFunction::AbsRoot,
            WeightKind::Log => WeightFunction::Log,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            WeightKind::One => "one",
            WeightKind::AbsLinear => "abslinear",
            WeightKind::AbsRoot => "absroot",
            WeightKind::Log => "log",
        }
    }
}

/// A chart design with a pre-calibrated limit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TunedDesign {
    pub family: ChartFamily,
    pub weight: Option<WeightKind>,
    pub mu0: f64,
    pub limit: f64,
}

impl TunedDesign {
    pub fn spec(&self) -> ChartSpec {
        spec_for(self.family, self.weight, self.mu0, self.limit)
    }
}

pub fn spec_for(
    family: ChartFamily,
    weight: Option<WeightKind>,
    mu0: f64,
    limit: f64,
) -> ChartSpec {
    let weight = weight.unwrap_or(WeightKind::One).to_weight();
    match family {
        ChartFamily::Ewma => ChartSpec::Ewma {
            mu0,
            lambda: DEFAULT_LAMBDA,
            limit,
        },
        ChartFamily::AbEwma => ChartSpec::AbEwma {
            mu0,
            lambda: DEFAULT_LAMBDA,
            weight,
            limit,
        },
        ChartFamily::AbcEwma => ChartSpec::AbcEwma {
            mu0,
            lambda: DEFAULT_LAMBDA,
            weight,
            limit,
        },
    }
}

/// Designs for in-control means 2 and 5 (the benchmark grids) and 1.48
/// (the particle-count case study).
pub const TUNED_DESIGNS: &[TunedDesign] = &[
    TunedDesign {
        family: ChartFamily::Ewma,
        weight: None,
        mu0: 2.0,
        limit: 0.877,
    },
    TunedDesign {
        family: ChartFamily::AbEwma,
        weight: Some(WeightKind::AbsLinear),
        mu0: 2.0,
        limit: 1.191,
    },
    TunedDesign {
        family: ChartFamily::AbcEwma,
        weight: Some(WeightKind::AbsLinear),
        mu0: 2.0,
        limit: 0.463,
    },
    TunedDesign {
        family: ChartFamily::Ewma,
        weight: None,
        mu0: 5.0,
        limit: 1.388,
    },
    TunedDesign {
        family: ChartFamily::AbEwma,
        weight: Some(WeightKind::AbsLinear),
        mu0: 5.0,
        limit: 1.614,
    },
    TunedDesign {
        family: ChartFamily::AbcEwma,
        weight: Some(WeightKind::AbsLinear),
        mu0: 5.0,
        limit: 0.1828,
    },
    TunedDesign {
        family: ChartFamily::AbEwma,
        weight: Some(WeightKind::AbsRoot),
        mu0: 2.0,
        limit: 1.053,
    },
    TunedDesign {
        family: ChartFamily::AbcEwma,
        weight: Some(WeightKind::AbsRoot),
        mu0: 2.0,
        limit: 0.382,
    },
    TunedDesign {
        family: ChartFamily::AbEwma,
        weight: Some(WeightKind::AbsRoot),
        mu0: 5.0,
        limit: 1.424,
    },
    TunedDesign {
        family: ChartFamily::AbcEwma,
        weight: Some(WeightKind::AbsRoot),
        mu0: 5.0,
        limit: 0.106,
    },
    TunedDesign {
        family: ChartFamily::AbEwma,
        weight: Some(WeightKind::Log),
        mu0: 2.0,
        limit: 1.089,
    },
    TunedDesign {
        family: ChartFamily::AbcEwma,
        weight: Some(WeightKind::Log),
        mu0: 2.0,
        limit: 0.396,
    },
    TunedDesign {
        family: ChartFamily::AbEwma,
        weight: Some(WeightKind::Log),
        mu0: 5.0,
        limit: 1.465,
    },
    TunedDesign {
        family: ChartFamily::AbcEwma,
        weight: Some(WeightKind::Log),
        mu0: 5.0,
        limit: 0.118,
    },
    TunedDesign {
        family: ChartFamily::Ewma,
        weight: None,
        mu0: 1.48,
        limit: 0.758,
    },
    TunedDesign {
        family: ChartFamily::AbEwma,
        weight: Some(WeightKind::AbsLinear),
        mu0: 1.48,
        limit: 1.099,
    },
    TunedDesign {
        family: ChartFamily::AbEwma,
        weight: Some(WeightKind::AbsRoot),
        mu0: 1.48,
        limit: 0.986,
    },
    TunedDesign {
        family: ChartFamily::AbEwma,
        weight: Some(WeightKind::Log),
        mu0: 1.48,
        limit: 1.017,
    },
    TunedDesign {
        family: ChartFamily::AbcEwma,
        weight: Some(WeightKind::AbsLinear),
        mu0: 1.48,
        limit: 0.638,
    },
    TunedDesign {
        family: ChartFamily::AbcEwma,
        weight: Some(WeightKind::AbsRoot),
        mu0: 1.48,
        limit: 0.574,
    },
    TunedDesign {
        family: ChartFamily::AbcEwma,
        weight: Some(WeightKind::Log),
        mu0: 1.48,
        limit: 0.581,
    },
];

/// Tuned limit for a (family, weight, mu0) combination, if known.
pub fn tuned_limit(family: ChartFamily, weight: Option<WeightKind>, mu0: f64) -> Option<f64> {
    TUNED_DESIGNS
        .iter()
        .find(|d| d.family == family && d.weight == weight && d.mu0 == mu0)
        .map(|d| d.limit)
}

/// Designs forming one benchmark grid (all charts tuned for `mu0`).
pub fn grid_designs(mu0: f64) -> Vec<TunedDesign> {
    TUNED_DESIGNS
        .iter()
        .filter(|d| d.mu0 == mu0)
        .copied()
        .collect()
}

/// Dispersion index of the overdispersed grid rows.
pub const GRID_DISP: f64 = 5.0 / 3.0;
/// Mean shift between grid columns.
pub const GRID_SHIFT: f64 = 0.25;

/// Out-of-control model families evaluated in the grids, in row order.
pub const GRID_FAMILIES: &[&str] = &["zip", "poi", "nb"];

/// One labeled grid cell.
#[derive(Clone, Debug, PartialEq)]
pub struct GridCell {
    pub design: TunedDesign,
    pub family: &'static str,
    pub mu: f64,
    pub disp: f64,
    pub tau: u32,
    pub task: GridTask,
}

/// Build the benchmark grid for one in-control mean: every tuned design
/// crossed with {ZIP, Poisson, NB} at mean shifts {-0.25, 0, +0.25},
/// overdispersed rows at dispersion index 5/3. `tau = 1` gives the
/// zero-state grid; larger `tau` the conditional-expected-delay grid.
pub fn build_grid(mu0: f64, tau: u32) -> Result<Vec<GridCell>, stein_spc_core::Error> {
    let mut cells = Vec::new();
    let in_model = CountModel::poisson(mu0)?;
    for design in grid_designs(mu0) {
        for &family in GRID_FAMILIES {
            for step in [-1.0, 0.0, 1.0] {
                let mu = mu0 + step * GRID_SHIFT;
                let out_model = match family {
                    "zip" => CountModel::zip(mu, GRID_DISP)?,
                    "poi" => CountModel::poisson(mu)?,
                    "nb" => CountModel::neg_bin(mu, GRID_DISP)?,
                    _ => unreachable!(),
                };
                cells.push(GridCell {
                    design,
                    family,
                    mu,
                    disp: out_model.dispersion(),
                    tau,
                    task: GridTask {
                        spec: design.spec(),
                        scenario: ChangeScenario {
                            in_model,
                            out_model,
                            tau,
                        },
                    },
                });
            }
        }
    }
    Ok(cells)
}
