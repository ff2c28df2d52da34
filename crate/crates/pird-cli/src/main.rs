//! Command-line front end: simulate benchmark systems, decompose
//! datasets, run modulation sweeps, and test significance against
//! shuffle surrogates.
//!
//! Every run writes its outputs plus a `manifest.json` capturing the
//! command, configuration, seed, and the method conventions baked into
//! this build — enough to reproduce the outputs byte for byte. All
//! randomness flows from the `--seed` flags, so repeated invocations
//! are deterministic.
//!
//! Exit codes: 0 success, 2 bad usage or parameters, 3 unreadable or
//! invalid data, 4 numerical degeneracy.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pird_core::engine::{self, Units};
use pird_core::ingest::{self, DatasetSpec, PreprocessOptions};
use pird_core::spectral::{FrequencyGrid, DEFAULT_GRID_POINTS};
use pird_core::surrogate::{self, SignificanceConfig};
use pird_core::sweep::{self, SweepConfig, SweepSetting};
use pird_core::var::{TimeSeriesSet, VarModel, DEFAULT_BURN_IN};
use pird_core::{PirdError, Result};

#[derive(Parser)]
#[command(
    name = "pird",
    version,
    about = "Partial information rate decomposition for multivariate time series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one benchmark system and write the series and model.
    Simulate(SimulateArgs),
    /// Fit a VAR to a CSV dataset and decompose its information rate.
    Decompose(DecomposeArgs),
    /// Sweep the benchmark family over its modulation parameter.
    Sweep(SweepArgs),
    /// Test decomposition quantities against shuffle surrogates.
    Surrogate(SurrogateArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum UnitsArg {
    Nats,
    Bits,
}

impl From<UnitsArg> for Units {
    fn from(u: UnitsArg) -> Units {
        match u {
            UnitsArg::Nats => Units::Nats,
            UnitsArg::Bits => Units::Bits,
        }
    }
}

#[derive(Args, Serialize)]
struct OutputArgs {
    /// Directory for all output files (created if absent).
    #[arg(long, default_value = ".")]
    #[serde(skip)]
    out_dir: PathBuf,
    /// Report rates in nats or bits.
    #[arg(long, value_enum, default_value = "nats")]
    units: UnitsArg,
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    /// Benchmark preset: 1 (uncorrelated innovations) or 2
    /// (instantaneous-to-lagged transition).
    #[arg(long)]
    setting: u8,
    /// Modulation parameter in [0, 1].
    #[arg(long)]
    d: f64,
    /// Number of samples to generate.
    #[arg(long)]
    n: usize,
    /// Random seed for the innovations.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Serialize)]
struct InputArgs {
    /// CSV file with a header row and one column per channel.
    #[arg(long)]
    input: PathBuf,
    /// Columns to load, in order (default: all except the date column).
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<String>>,
    /// Column holding timestamps; excluded from the numeric data.
    #[arg(long)]
    date_column: Option<String>,
    /// Cell content marking a missing value (always an error if found).
    #[arg(long)]
    na: Option<String>,
    /// Remove each channel's linear trend before analysis.
    #[arg(long)]
    detrend: bool,
    /// Remove a seasonal cycle of this period before analysis.
    #[arg(long, value_name = "PERIOD")]
    deseasonalize: Option<usize>,
    /// Deseasonalize before detrending instead of after.
    #[arg(long)]
    season_first: bool,
    /// Target channel (label or zero-based index).
    #[arg(long)]
    target: String,
    /// Source channels (labels or zero-based indices, comma-separated).
    #[arg(long, value_delimiter = ',')]
    sources: Vec<String>,
    /// Fix the VAR order instead of selecting it by criterion.
    #[arg(long)]
    order: Option<usize>,
    /// Largest order offered to the selection criterion.
    #[arg(long, default_value_t = 20)]
    max_order: usize,
}

impl InputArgs {
    fn dataset_spec(&self) -> DatasetSpec {
        DatasetSpec {
            path: self.input.clone(),
            columns: self.columns.clone(),
            date_column: self.date_column.clone(),
            sampling: None,
            na_sentinel: self.na.clone(),
        }
    }

    fn preprocess_options(&self) -> PreprocessOptions {
        PreprocessOptions {
            detrend: self.detrend,
            season_period: self.deseasonalize,
            season_first: self.season_first,
        }
    }

    /// Loads, preprocesses, and fits, returning the series, the fitted
    /// model, and the order used.
    fn prepare(&self) -> Result<(TimeSeriesSet, VarModel, usize)> {
        let series = ingest::load_csv(&self.dataset_spec())?;
        let series = ingest::preprocess(&series, &self.preprocess_options())?;
        let order = match self.order {
            Some(p) => p,
            None => VarModel::select_order(&series, self.max_order)?,
        };
        let model = VarModel::estimate(&series, order)?;
        Ok((series, model, order))
    }

    fn resolve_selection(&self, series: &TimeSeriesSet) -> Result<(usize, Vec<usize>)> {
        let target = resolve_channel(series, &self.target)?;
        let sources = self
            .sources
            .iter()
            .map(|s| resolve_channel(series, s))
            .collect::<Result<Vec<_>>>()?;
        Ok((target, sources))
    }
}

#[derive(Args, Serialize)]
struct DecomposeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Number of frequency-grid points on [0, pi].
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    grid_points: usize,
    /// Restrict integration to a frequency band (two values in [0, pi]).
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    band: Option<Vec<f64>>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Serialize)]
struct SweepArgs {
    /// Benchmark preset: 1 or 2.
    #[arg(long)]
    setting: u8,
    /// Modulation values (default: 0 to 1 in steps of 0.05).
    #[arg(long, value_delimiter = ',')]
    d_values: Option<Vec<f64>>,
    /// Number of frequency-grid points on [0, pi].
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    grid_points: usize,
    /// Analyze fitted models of simulated data instead of true
    /// parameters.
    #[arg(long)]
    estimate: bool,
    /// Samples per simulation (estimate mode).
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Largest order offered to the selection criterion (estimate mode).
    #[arg(long, default_value_t = 5)]
    max_order: usize,
    /// Seed for estimate-mode simulations.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Serialize)]
struct SurrogateArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Number of shuffle surrogates.
    #[arg(long, default_value_t = 100)]
    n_surrogates: usize,
    /// Two-sided significance level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Master seed for the surrogate permutations.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of frequency-grid points on [0, pi].
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    grid_points: usize,
    #[command(flatten)]
    output: OutputArgs,
}

/// Conventions baked into this build, recorded in every manifest so a
/// result can be tied to the exact method variant that produced it.
fn method_notes() -> serde_json::Value {
    serde_json::json!({
        "quadrature": "trapezoid rule on [0, pi], weights normalized to integrate 1 to 1",
        "redundancy_rule": "frequency-wise minimum of group spectral rates",
        "residual_covariance_divisor": "regression rows (n - order)",
        "order_criterion": "ln det of residual covariance + 2 p M^2 / T, candidates fitted on a common sample range",
        "deseasonalization": "phase-mean subtraction at the sample-index phase",
        "preprocess_order": "detrend then deseasonalize unless --season-first",
        "static_decomposition_source": "model-implied zero-lag covariance",
        "surrogate_order_selection": "re-selected per surrogate",
        "percentile_rule": "exclusive interpolation at position q(n+1), clamped to the extremes",
        "summary_above_two_sources": "redundancy = all-singletons atom; unique = singletons; synergy = atoms with all groups of size >= 2; residual = rest",
    })
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    command: &'a str,
    version: &'a str,
    config: &'a C,
    method_notes: serde_json::Value,
    outputs: Vec<String>,
}

/// Writes the named files plus a manifest listing them.
fn write_run<C: Serialize>(
    out_dir: &Path,
    command: &str,
    config: &C,
    files: Vec<(String, String)>,
) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config,
        method_notes: method_notes(),
        outputs: files.iter().map(|(n, _)| n.clone()).collect(),
    };
    for (name, content) in &files {
        std::fs::write(out_dir.join(name), content)?;
    }
    let manifest_json =
        serde_json::to_string_pretty(&manifest).expect("manifest serialization cannot fail");
    std::fs::write(out_dir.join("manifest.json"), manifest_json + "\n")?;
    for (name, _) in &files {
        println!("wrote {}", out_dir.join(name).display());
    }
    println!("wrote {}", out_dir.join("manifest.json").display());
    Ok(())
}

fn resolve_channel(series: &TimeSeriesSet, token: &str) -> Result<usize> {
    if let Ok(index) = token.parse::<usize>() {
        if index >= series.dim() {
            return Err(PirdError::InvalidParameter {
                name: "channel",
                reason: format!(
                    "index {index} out of range for {} channels",
                    series.dim()
                ),
            });
        }
        return Ok(index);
    }
    series.channel_index(token)
}

fn parse_band(band: &Option<Vec<f64>>) -> Option<(f64, f64)> {
    band.as_ref().map(|b| (b[0], b[1]))
}

fn series_csv(series: &TimeSeriesSet) -> String {
    let mut out = series.labels().join(",");
    out.push('\n');
    for t in 0..series.n_samples() {
        for j in 0..series.dim() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&series.samples()[(t, j)].to_string());
        }
        out.push('\n');
    }
    out
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let setting = SweepSetting::from_index(args.setting)?;
    let model = sweep::build_model(setting, args.d)?;
    let series = model
        .simulate(args.n, DEFAULT_BURN_IN, args.seed)?
        .with_labels(vec!["x1".into(), "x2".into(), "y".into()])?;
    let model_json =
        serde_json::to_string_pretty(&model).expect("model serialization cannot fail");
    write_run(
        &args.output.out_dir,
        "simulate",
        args,
        vec![
            ("simulated.csv".into(), series_csv(&series)),
            ("model.json".into(), model_json + "\n"),
        ],
    )
}

fn cmd_decompose(args: &DecomposeArgs) -> Result<()> {
    let (series, model, order) = args.input.prepare()?;
    let (target, sources) = args.input.resolve_selection(&series)?;
    let grid = FrequencyGrid::uniform(args.grid_points)?;
    let band = parse_band(&args.band);
    let result = engine::decompose(&model, target, &sources, &grid, band)?;

    let units = args.output.units.into();
    let report = engine::PirdReport::new(&result, units);
    let cov = model.process_covariance()?;
    let static_pid = engine::static_pid(&cov, target, &sources)?;
    let scale = match units {
        Units::Nats => 1.0,
        Units::Bits => 1.0 / std::f64::consts::LN_2,
    };
    let static_json = serde_json::json!({
        "units": units,
        "fitted_order": order,
        "redundancy": static_pid.redundancy * scale,
        "unique": static_pid.unique.iter().map(|u| u * scale).collect::<Vec<_>>(),
        "synergy": static_pid.synergy * scale,
        "residual": static_pid.residual * scale,
        "convention": static_pid.convention,
    });

    write_run(
        &args.output.out_dir,
        "decompose",
        args,
        vec![
            (
                "decomposition.json".into(),
                serde_json::to_string_pretty(&report).expect("report serialization") + "\n",
            ),
            (
                "static_pid.json".into(),
                serde_json::to_string_pretty(&static_json).expect("static serialization") + "\n",
            ),
            ("profiles.csv".into(), engine::profiles_csv(&result, units)),
        ],
    )
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let setting = SweepSetting::from_index(args.setting)?;
    let mut config = SweepConfig::new(
        setting,
        args.d_values.clone().unwrap_or_else(sweep::default_d_grid),
    );
    config.grid_points = args.grid_points;
    if args.estimate {
        config.estimate = Some(sweep::EstimateConfig {
            n_samples: args.n,
            max_order: args.max_order,
            seed: args.seed,
        });
    }
    let result = sweep::run_sweep(&config)?;
    write_run(
        &args.output.out_dir,
        "sweep",
        args,
        vec![(
            "sweep.csv".into(),
            sweep::sweep_csv(&result, args.output.units.into()),
        )],
    )
}

fn cmd_surrogate(args: &SurrogateArgs) -> Result<()> {
    let spec = args.input.dataset_spec();
    let series = ingest::load_csv(&spec)?;
    let series = ingest::preprocess(&series, &args.input.preprocess_options())?;
    let (target, sources) = args.input.resolve_selection(&series)?;
    let config = SignificanceConfig {
        n_surrogates: args.n_surrogates,
        alpha: args.alpha,
        seed: args.seed,
        max_order: args.input.max_order,
        grid_points: args.grid_points,
    };
    let report = surrogate::significance(&series, target, &sources, &config)?;
    write_run(
        &args.output.out_dir,
        "surrogate",
        args,
        vec![
            (
                "significance.json".into(),
                serde_json::to_string_pretty(&report).expect("report serialization") + "\n",
            ),
            (
                "surrogate_distributions.csv".into(),
                surrogate::distributions_csv(&report),
            ),
        ],
    )
}

/// Maps failures onto the documented exit codes.
fn exit_code(e: &PirdError) -> u8 {
    match e {
        PirdError::InvalidParameter { .. }
        | PirdError::SourceCount { .. }
        | PirdError::BandOutOfRange { .. }
        | PirdError::IncompleteAtomValues { .. } => 2,
        PirdError::Parse { .. }
        | PirdError::MissingColumn { .. }
        | PirdError::EmptyData
        | PirdError::NonFinite { .. }
        | PirdError::RankDeficient { .. }
        | PirdError::InsufficientSamples { .. }
        | PirdError::Io(_) => 3,
        PirdError::UnstableModel { .. }
        | PirdError::NearNonstationary { .. }
        | PirdError::DegenerateSpectrum { .. }
        | PirdError::InternalConsistency { .. } => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Decompose(args) => cmd_decompose(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Surrogate(args) => cmd_surrogate(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
