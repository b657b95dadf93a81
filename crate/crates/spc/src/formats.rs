//! File formats: counts CSV input, design-record JSON, trajectory CSV,
//! table CSV/JSON, and the Phase-I report JSON.
//!
//! Counts files hold one nonnegative integer per line; blank lines and
//! lines starting with `#` are ignored, and a single leading header
//! line is auto-detected. All JSON documents carry
//! `"schema": "stein-spc/v1"`.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use stein_spc_core::phase1::Phase1Report;
use stein_spc_core::{ChartSpec, Error as CoreError};
use thiserror::Error;

use crate::presets::{spec_for, ChartFamily, GridCell, WeightKind};
use crate::simrl::{RunLengthStats, SimError};

/// Schema tag carried by every JSON document.
pub const SCHEMA: &str = "stein-spc/v1";

#[derive(Debug, Error)]
pub enum InputError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: not a nonnegative integer count: {content:?}")]
    BadCount {
        path: String,
        line: usize,
        content: String,
    },
    #[error("{path}: no counts found")]
    Empty { path: String },
    #[error("{path}: {message}")]
    BadRecord { path: String, message: String },
}

/// Read a counts file: one count per line, `#` comments and blank lines
/// skipped, one optional header line tolerated.
pub fn read_counts_path(path: &Path) -> Result<Vec<u64>, InputError> {
    let file = fs::File::open(path).map_err(|source| InputError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_counts(BufReader::new(file), &path.display().to_string())
}

pub fn read_counts<R: Read>(reader: BufReader<R>, path: &str) -> Result<Vec<u64>, InputError> {
    let mut counts = Vec::new();
    let mut saw_data_line = false;
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| InputError::Io {
            path: path.to_string(),
            source,
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match trimmed.parse::<u64>() {
            Ok(x) => {
                counts.push(x);
                saw_data_line = true;
            }
            Err(_) if !saw_data_line => {
                // a single leading header line is fine
                saw_data_line = true;
            }
            Err(_) => {
                return Err(InputError::BadCount {
                    path: path.to_string(),
                    line: idx + 1,
                    content: trimmed.to_string(),
                });
            }
        }
    }
    if counts.is_empty() {
        return Err(InputError::Empty {
            path: path.to_string(),
        });
    }
    Ok(counts)
}

/// A chart design as written by `calibrate` and read back by `monitor`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignRecord {
    pub schema: String,
    /// `c`, `ewma`, `ab`, or `abc`.
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub weight: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<f64>,
    pub mu0: f64,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none", default)]
    pub limit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub c_threshold: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub achieved_arl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub se: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reps: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
}

pub fn parse_weight_name(name: &str) -> Option<WeightKind> {
    match name {
        "one" | "constant" => Some(WeightKind::One),
        "abslinear" => Some(WeightKind::AbsLinear),
        "absroot" => Some(WeightKind::AbsRoot),
        "log" | "ln" => Some(WeightKind::Log),
        _ => None,
    }
}

impl DesignRecord {
    pub fn from_spec(spec: &ChartSpec) -> Self {
        let (kind, weight) = match spec {
            ChartSpec::CChart { .. } => ("c", None),
            ChartSpec::Ewma { .. } => ("ewma", None),
            ChartSpec::AbEwma { weight, .. } => ("ab", Some(weight)),
            ChartSpec::AbcEwma { weight, .. } => ("abc", Some(weight)),
        };
        let weight = weight.map(|w| {
            use stein_spc_core::WeightFunction::*;
            match w {
                ConstantOne => "one".to_string(),
                AbsLinear => "abslinear".to_string(),
                AbsRoot => "absroot".to_string(),
                Log => "log".to_string(),
                Table(_) => "table".to_string(),
            }
        });
        let c_threshold = match spec {
            ChartSpec::CChart { threshold, .. } => Some(*threshold),
            _ => None,
        };
        DesignRecord {
            schema: SCHEMA.to_string(),
            kind: kind.to_string(),
            weight,
            lambda: spec.lambda(),
            mu0: spec.mu0(),
            limit: spec.limit(),
            c_threshold,
            achieved_arl: None,
            se: None,
            reps: None,
            seed: None,
        }
    }

    pub fn to_spec(&self) -> Result<ChartSpec, CoreError> {
        match self.kind.as_str() {
            "c" => {
                let threshold = self
                    .c_threshold
                    .ok_or(CoreError::Spec("c-chart record needs c_threshold"))?;
                Ok(ChartSpec::CChart {
                    mu0: self.mu0,
                    threshold,
                })
            }
            kind => {
                let family = match kind {
                    "ewma" => ChartFamily::Ewma,
                    "ab" => ChartFamily::AbEwma,
                    "abc" => ChartFamily::AbcEwma,
                    _ => return Err(CoreError::Spec("unknown chart kind")),
                };
                let limit = self.limit.ok_or(CoreError::Spec("record needs L"))?;
                let weight = match (&self.weight, family) {
                    (_, ChartFamily::Ewma) => None,
                    (Some(name), _) => Some(
                        parse_weight_name(name).ok_or(CoreError::Spec("unknown weight name"))?,
                    ),
                    (None, _) => return Err(CoreError::Spec("AB/ABC record needs a weight")),
                };
                let mut spec = spec_for(family, weight, self.mu0, limit);
                if let Some(lambda) = self.lambda {
                    spec = match spec {
                        ChartSpec::Ewma { mu0, limit, .. } => {
                            ChartSpec::Ewma { mu0, lambda, limit }
                        }
                        ChartSpec::AbEwma {
                            mu0, weight, limit, ..
                        } => ChartSpec::AbEwma {
                            mu0,
                            lambda,
                            weight,
                            limit,
                        },
                        ChartSpec::AbcEwma {
                            mu0, weight, limit, ..
                        } => ChartSpec::AbcEwma {
                            mu0,
                            lambda,
                            weight,
                            limit,
                        },
                        c => c,
                    };
                }
                spec.validate()?;
                Ok(spec)
            }
        }
    }

    pub fn read_path(path: &Path) -> Result<Self, InputError> {
        let text = fs::read_to_string(path).map_err(|source| InputError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let record: DesignRecord =
            serde_json::from_str(&text).map_err(|e| InputError::BadRecord {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
        if record.schema != SCHEMA {
            return Err(InputError::BadRecord {
                path: path.display().to_string(),
                message: format!("unsupported schema {:?}", record.schema),
            });
        }
        Ok(record)
    }
}

/// Trajectory CSV: `t,x,stat,lcl,ucl,alarm` (limits empty when absent).
pub fn trajectory_csv(spec: &ChartSpec, series: &[u64], stats: &[f64]) -> String {
    let (lcl, ucl) = spec.limits();
    let fmt = |v: Option<f64>| v.map(|v| format!("{v}")).unwrap_or_default();
    let (lcl, ucl) = (fmt(lcl), fmt(ucl));
    let mut out = String::from("t,x,stat,lcl,ucl,alarm\n");
    for (i, (&x, &stat)) in series.iter().zip(stats).enumerate() {
        let alarm = matches!(spec.check(stat), stein_spc_core::Decision::Alarm) as u8;
        let _ = writeln!(out, "{},{},{},{},{},{}", i + 1, x, stat, lcl, ucl, alarm);
    }
    out
}

/// One evaluated grid cell, flattened for serialization.
#[derive(Clone, Debug, Serialize)]
pub struct CellDoc {
    pub chart: &'static str,
    pub weight: Option<&'static str>,
    #[serde(rename = "L")]
    pub limit: f64,
    pub family: &'static str,
    pub mu: f64,
    pub disp: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps_used: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps_discarded: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps_censored: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Full result-table document.
#[derive(Clone, Debug, Serialize)]
pub struct TableDoc {
    pub schema: &'static str,
    /// `"zero_state"` or `"ced"`.
    pub table: &'static str,
    pub mu0: f64,
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<u32>,
    pub reps: u32,
    pub seed: u64,
    pub max_t: u32,
    pub cells: Vec<CellDoc>,
}

pub fn table_doc(
    cells: &[GridCell],
    results: &[Result<RunLengthStats, SimError>],
    mu0: f64,
    reps: u32,
    seed: u64,
    max_t: u32,
) -> TableDoc {
    let tau = cells.first().map(|c| c.tau).unwrap_or(1);
    let docs = cells
        .iter()
        .zip(results)
        .map(|(cell, result)| {
            let mut doc = CellDoc {
                chart: cell.design.family.name(),
                weight: cell.design.weight.map(|w| w.name()),
                limit: cell.design.limit,
                family: cell.family,
                mu: cell.mu,
                disp: cell.disp,
                mean: None,
                se: None,
                reps_used: None,
                reps_discarded: None,
                reps_censored: None,
                error: None,
            };
            match result {
                Ok(stats) => {
                    doc.mean = Some(stats.mean);
                    doc.se = Some(stats.se);
                    doc.reps_used = Some(stats.reps_used);
                    doc.reps_discarded = Some(stats.reps_discarded);
                    doc.reps_censored = Some(stats.reps_censored);
                }
                Err(e) => doc.error = Some(e.to_string()),
            }
            doc
        })
        .collect();
    TableDoc {
        schema: SCHEMA,
        table: if tau == 1 { "zero_state" } else { "ced" },
        mu0,
        lambda: crate::presets::DEFAULT_LAMBDA,
        tau: if tau == 1 { None } else { Some(tau) },
        reps,
        seed,
        max_t,
        cells: docs,
    }
}

impl TableDoc {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "chart,weight,L,family,mu,disp,mean,se,reps_used,reps_discarded,reps_censored,error\n",
        );
        for c in &self.cells {
            let opt_f = |v: Option<f64>| v.map(|v| format!("{v}")).unwrap_or_default();
            let opt_u = |v: Option<u32>| v.map(|v| format!("{v}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                c.chart,
                c.weight.unwrap_or(""),
                c.limit,
                c.family,
                c.mu,
                c.disp,
                opt_f(c.mean),
                opt_f(c.se),
                opt_u(c.reps_used),
                opt_u(c.reps_discarded),
                opt_u(c.reps_censored),
                c.error.as_deref().unwrap_or(""),
            );
        }
        out
    }
}

/// Phase-I report JSON document.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Phase1Doc {
    pub schema: String,
    pub t0: usize,
    pub mean: f64,
    pub disp_hat: f64,
    pub disp_pvalue: f64,
    /// Dispersion test rejected at the 1% level: the Poisson in-control
    /// assumption is questionable.
    pub overdispersion_warning: bool,
    pub acf: Vec<AcfDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zip_fit: Option<ZipFitDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AcfDoc {
    pub lag: u32,
    pub value: f64,
    pub bound: f64,
    pub significant: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZipFitDoc {
    pub omega: f64,
    pub lambda: f64,
    pub loglik: f64,
}

pub fn phase1_doc(report: &Phase1Report, alpha: f64) -> Phase1Doc {
    Phase1Doc {
        schema: SCHEMA.to_string(),
        t0: report.t0,
        mean: report.mean,
        disp_hat: report.disp_hat,
        disp_pvalue: report.disp_pvalue,
        overdispersion_warning: report.disp_pvalue < alpha,
        acf: report
            .acf
            .iter()
            .map(|l| AcfDoc {
                lag: l.lag,
                value: l.value,
                bound: l.bound,
                significant: l.significant(),
            })
            .collect(),
        zip_fit: report.zip_fit.map(|f| ZipFitDoc {
            omega: f.omega,
            lambda: f.lambda,
            loglik: f.loglik,
        }),
    }
}
