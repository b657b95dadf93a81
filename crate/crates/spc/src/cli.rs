//! The `stein-spc` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 input/output data error,
//! 3 numerical or estimation failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use stein_spc_core::{ChartSpec, CountModel, Error as CoreError};

use crate::calibrate::{c_chart_design, find_l};
use crate::formats::{phase1_doc, table_doc, trajectory_csv, DesignRecord, InputError, SCHEMA};
use crate::presets::{self, build_grid, spec_for, ChartFamily, WeightKind, DEFAULT_SEED};
use crate::simrl::{evaluate_grid, SimError};
use crate::svg::render_chart;

/// Dispersion-test level at which `phase1` warns that the Poisson
/// in-control assumption is questionable.
const OVERDISPERSION_ALPHA: f64 = 0.01;

#[derive(Parser, Debug)]
#[command(
    name = "stein-spc",
    version,
    about = "Poisson count monitoring with ordinary, AB-, and ABC-EWMA control charts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Design a chart: search the control-limit half-width for a target
    /// in-control ARL (the c-chart is designed analytically)
    Calibrate(CalibrateArgs),
    /// Evaluate a benchmark grid of zero-state ARLs or CED values
    Table(TableArgs),
    /// Run a designed chart over a counts file and report the first alarm
    Monitor(MonitorArgs),
    /// Phase-I diagnostics: mean, dispersion test, ACF, ZIP fit
    Phase1(Phase1Args),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ChartKindArg {
    C,
    Ewma,
    Ab,
    Abc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WeightArg {
    One,
    Abslinear,
    Absroot,
    Log,
}

impl WeightArg {
    fn kind(self) -> WeightKind {
        match self {
            WeightArg::One => WeightKind::One,
            WeightArg::Abslinear => WeightKind::AbsLinear,
            WeightArg::Absroot => WeightKind::AbsRoot,
            WeightArg::Log => WeightKind::Log,
        }
    }
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    /// Chart kind
    #[arg(long, value_enum)]
    pub chart: ChartKindArg,
    /// Stein weight (required for ab/abc)
    #[arg(long, value_enum)]
    pub weight: Option<WeightArg>,
    /// In-control mean
    #[arg(long)]
    pub mu0: f64,
    /// EWMA smoothing parameter
    #[arg(long, default_value_t = presets::DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Target in-control ARL
    #[arg(long, default_value_t = presets::DEFAULT_TARGET_ARL)]
    pub target: f64,
    /// Monte Carlo replications per ARL evaluation
    #[arg(long, default_value_t = 10_000)]
    pub reps: u32,
    /// Master seed (STEIN_SPC_SEED as fallback)
    #[arg(long, env = "STEIN_SPC_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Lower end of the search bracket
    #[arg(long, requires = "bracket_hi")]
    pub bracket_lo: Option<f64>,
    /// Upper end of the search bracket
    #[arg(long, requires = "bracket_lo")]
    pub bracket_hi: Option<f64>,
    /// Stop once the bracket ARL spread is within this fraction of target
    #[arg(long, default_value_t = 0.01)]
    pub rel_tol: f64,
    /// Write the design record here (JSON also goes to stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TableArgs {
    /// 1 = zero-state ARLs, 2 = CED(tau)
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub table: u8,
    /// In-control mean of the grid (a tuned design set must exist: 2 or 5)
    #[arg(long)]
    pub mu0: f64,
    /// Change point for table 2
    #[arg(long, default_value_t = 100)]
    pub tau: u32,
    #[arg(long, default_value_t = 10_000)]
    pub reps: u32,
    #[arg(long, env = "STEIN_SPC_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Run-length cap per replication
    #[arg(long, default_value_t = 37_000)]
    pub max_t: u32,
    /// Worker threads (default: all cores)
    #[arg(long)]
    pub threads: Option<usize>,
    /// Write the table as CSV (default: stdout)
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    /// Write the table as JSON
    #[arg(long)]
    pub out_json: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MonitorArgs {
    /// Counts file (one count per line)
    pub counts: PathBuf,
    /// Design record JSON from `calibrate`
    #[arg(long, conflicts_with_all = ["chart", "limit", "threshold"])]
    pub design: Option<PathBuf>,
    /// Chart kind (inline design)
    #[arg(long, value_enum, requires = "mu0")]
    pub chart: Option<ChartKindArg>,
    #[arg(long, value_enum)]
    pub weight: Option<WeightArg>,
    #[arg(long)]
    pub mu0: Option<f64>,
    #[arg(long, default_value_t = presets::DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Control-limit half-width (inline ewma/ab/abc design)
    #[arg(long)]
    pub limit: Option<f64>,
    /// Alarm threshold (inline c-chart design)
    #[arg(long)]
    pub threshold: Option<u64>,
    /// Write the trajectory CSV here
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write a static SVG rendering here
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct Phase1Args {
    /// Counts file (one count per line)
    pub counts: PathBuf,
    /// Autocorrelation lags to report
    #[arg(long, default_value_t = 20)]
    pub max_lag: u32,
    /// Write the report here (JSON also goes to stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Input(#[from] InputError),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

/// Core errors triggered by command-line parameters are usage errors;
/// data-driven ones are input errors; series/iteration failures are
/// numerical.
fn core_error_from_flags(e: CoreError) -> CliError {
    match e {
        CoreError::Domain(_) | CoreError::Spec(_) => CliError::Usage(e.to_string()),
        CoreError::Degenerate(_) => CliError::Input(InputError::BadRecord {
            path: String::new(),
            message: e.to_string(),
        }),
        _ => CliError::Numeric(e.to_string()),
    }
}

fn sim_error(e: SimError) -> CliError {
    match e {
        SimError::Config(_) => CliError::Usage(e.to_string()),
        SimError::Core(inner) => core_error_from_flags(inner),
        _ => CliError::Numeric(e.to_string()),
    }
}

fn core_error_from_data(e: CoreError) -> CliError {
    match e {
        CoreError::Degenerate(msg) => CliError::Input(InputError::BadRecord {
            path: String::new(),
            message: format!("degenerate data: {msg}"),
        }),
        other => CliError::Numeric(other.to_string()),
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    fs::write(path, content).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Parse and execute; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::Table(args) => cmd_table(args),
        Command::Monitor(args) => cmd_monitor(args),
        Command::Phase1(args) => cmd_phase1(args),
    }
}

fn weight_for(
    chart: ChartKindArg,
    weight: Option<WeightArg>,
) -> Result<Option<WeightKind>, CliError> {
    match chart {
        ChartKindArg::Ab | ChartKindArg::Abc => match weight {
            Some(w) => Ok(Some(w.kind())),
            None => Err(CliError::Usage(
                "--weight is required for ab/abc charts".into(),
            )),
        },
        _ => Ok(None),
    }
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<(), CliError> {
    let record = match args.chart {
        ChartKindArg::C => {
            let design = c_chart_design(args.mu0, args.target).map_err(core_error_from_flags)?;
            let mut record = DesignRecord::from_spec(&ChartSpec::CChart {
                mu0: args.mu0,
                threshold: design.threshold,
            });
            record.achieved_arl = Some(design.achieved_arl);
            eprintln!(
                "threshold {} gives ARL {:.1}; neighbors: >={} -> {:.1}, >={} -> {:.1}",
                design.threshold,
                design.achieved_arl,
                design.below.0,
                design.below.1,
                design.above.0,
                design.above.1
            );
            record
        }
        chart => {
            let family = match chart {
                ChartKindArg::Ewma => ChartFamily::Ewma,
                ChartKindArg::Ab => ChartFamily::AbEwma,
                ChartKindArg::Abc => ChartFamily::AbcEwma,
                ChartKindArg::C => unreachable!(),
            };
            let weight = weight_for(chart, args.weight)?;
            let template = spec_for(family, weight, args.mu0, 0.0);
            let template = match template {
                ChartSpec::Ewma { mu0, limit, .. } => ChartSpec::Ewma {
                    mu0,
                    lambda: args.lambda,
                    limit,
                },
                ChartSpec::AbEwma {
                    mu0, weight, limit, ..
                } => ChartSpec::AbEwma {
                    mu0,
                    lambda: args.lambda,
                    weight,
                    limit,
                },
                ChartSpec::AbcEwma {
                    mu0, weight, limit, ..
                } => ChartSpec::AbcEwma {
                    mu0,
                    lambda: args.lambda,
                    weight,
                    limit,
                },
                c => c,
            };
            template.validate().map_err(core_error_from_flags)?;
            let model0 = CountModel::poisson(args.mu0).map_err(core_error_from_flags)?;
            let bracket = match (args.bracket_lo, args.bracket_hi) {
                (Some(lo), Some(hi)) => Some((lo, hi)),
                _ => None,
            };
            let cal = find_l(
                &template,
                &model0,
                args.target,
                args.reps,
                args.seed,
                bracket,
                args.rel_tol,
            )
            .map_err(sim_error)?;
            let mut record = DesignRecord::from_spec(&template.with_limit(cal.l));
            record.achieved_arl = Some(cal.achieved_arl);
            record.se = Some(cal.se);
            record.reps = Some(args.reps);
            record.seed = Some(args.seed);
            record
        }
    };
    let json = serde_json::to_string_pretty(&record).expect("record serializes");
    println!("{json}");
    if let Some(path) = &args.out {
        write_file(path, &json)?;
    }
    Ok(())
}

fn cmd_table(args: TableArgs) -> Result<(), CliError> {
    let tau = if args.table == 1 { 1 } else { args.tau };
    if tau == 0 {
        return Err(CliError::Usage("tau must be >= 1".into()));
    }
    let cells = build_grid(args.mu0, tau).map_err(core_error_from_flags)?;
    if cells.is_empty() {
        return Err(CliError::Usage(format!(
            "no tuned designs for mu0 = {}; available in-control means: 1.48, 2, 5",
            args.mu0
        )));
    }
    let tasks: Vec<_> = cells.iter().map(|c| c.task.clone()).collect();
    let results = match args.threads {
        None => evaluate_grid(&tasks, args.reps, args.seed, args.max_t),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot build thread pool: {e}")))?;
            pool.install(|| evaluate_grid(&tasks, args.reps, args.seed, args.max_t))
        }
    };
    let doc = table_doc(&cells, &results, args.mu0, args.reps, args.seed, args.max_t);
    let csv = doc.to_csv();
    match &args.out_csv {
        Some(path) => write_file(path, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(path) = &args.out_json {
        let json = serde_json::to_string_pretty(&doc).expect("table serializes");
        write_file(path, &json)?;
    }
    let failures = doc.cells.iter().filter(|c| c.error.is_some()).count();
    if failures > 0 {
        eprintln!(
            "{failures} of {} cells failed (see error column)",
            doc.cells.len()
        );
    }
    Ok(())
}

fn monitor_spec(args: &MonitorArgs) -> Result<ChartSpec, CliError> {
    if let Some(path) = &args.design {
        let record = DesignRecord::read_path(path)?;
        return record.to_spec().map_err(|e| {
            CliError::Input(InputError::BadRecord {
                path: path.display().to_string(),
                message: e.to_string(),
            })
        });
    }
    let chart = args.chart.ok_or_else(|| {
        CliError::Usage("either --design or an inline --chart design is required".into())
    })?;
    let mu0 = args
        .mu0
        .ok_or_else(|| CliError::Usage("--mu0 is required for an inline design".into()))?;
    let spec = match chart {
        ChartKindArg::C => ChartSpec::CChart {
            mu0,
            threshold: args
                .threshold
                .ok_or_else(|| CliError::Usage("c-chart needs --threshold".into()))?,
        },
        _ => {
            let limit = args
                .limit
                .ok_or_else(|| CliError::Usage("ewma/ab/abc charts need --limit".into()))?;
            let family = match chart {
                ChartKindArg::Ewma => ChartFamily::Ewma,
                ChartKindArg::Ab => ChartFamily::AbEwma,
                ChartKindArg::Abc => ChartFamily::AbcEwma,
                ChartKindArg::C => unreachable!(),
            };
            let weight = weight_for(chart, args.weight)?;
            let spec = spec_for(family, weight, mu0, limit);
            match spec {
                ChartSpec::Ewma { mu0, limit, .. } => ChartSpec::Ewma {
                    mu0,
                    lambda: args.lambda,
                    limit,
                },
                ChartSpec::AbEwma {
                    mu0, weight, limit, ..
                } => ChartSpec::AbEwma {
                    mu0,
                    lambda: args.lambda,
                    weight,
                    limit,
                },
                ChartSpec::AbcEwma {
                    mu0, weight, limit, ..
                } => ChartSpec::AbcEwma {
                    mu0,
                    lambda: args.lambda,
                    weight,
                    limit,
                },
                c => c,
            }
        }
    };
    spec.validate().map_err(core_error_from_flags)?;
    Ok(spec)
}

fn cmd_monitor(args: MonitorArgs) -> Result<(), CliError> {
    let spec = monitor_spec(&args)?;
    let counts = crate::formats::read_counts_path(&args.counts)?;
    let monitoring = spec.monitor(&counts).map_err(core_error_from_data)?;
    match monitoring.first_alarm {
        Some(t) => println!("first alarm at t = {t}"),
        None => println!("no alarm in {} observations", counts.len()),
    }
    if let Some(path) = &args.out {
        write_file(path, &trajectory_csv(&spec, &counts, &monitoring.stats))?;
    }
    if let Some(path) = &args.svg {
        write_file(path, &render_chart(&spec, &monitoring.stats))?;
    }
    Ok(())
}

fn cmd_phase1(args: Phase1Args) -> Result<(), CliError> {
    let counts = crate::formats::read_counts_path(&args.counts)?;
    let report = stein_spc_core::phase1::phase1_report(&counts, args.max_lag)
        .map_err(core_error_from_data)?;
    let doc = phase1_doc(&report, OVERDISPERSION_ALPHA);
    if doc.overdispersion_warning {
        eprintln!(
            "warning: dispersion test rejects equidispersion (I_hat = {:.3}, p = {:.3e}); \
             a Poisson in-control model is questionable",
            doc.disp_hat, doc.disp_pvalue
        );
    }
    let json = serde_json::to_string_pretty(&doc).expect("report serializes");
    println!("{json}");
    if let Some(path) = &args.out {
        write_file(path, &json)?;
    }
    Ok(())
}

// keep the schema constant referenced so the doc comment stays honest
const _: &str = SCHEMA;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["stein-spc", "calibrate"]), 1); // missing --mu0/--chart
        assert_eq!(run(["stein-spc", "frobnicate"]), 1);
        assert_eq!(
            run(["stein-spc", "calibrate", "--chart", "ab", "--mu0", "2"]),
            1
        ); // missing --weight
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(run(["stein-spc", "--help"]), 0);
        assert_eq!(run(["stein-spc", "calibrate", "--help"]), 0);
    }

    #[test]
    fn missing_file_exits_two() {
        assert_eq!(run(["stein-spc", "phase1", "/nonexistent/counts.csv"]), 2);
    }
}
