//! `fado` — command-line pipeline for entropy-based instance valuation,
//! fairness-aware preprocessing, and trade-off benchmarking.
//!
//! Subcommands: `synth`, `value`, `preprocess`, `evaluate`, `benchmark`.
//! Logs go to standard error; data goes only to files. Exit codes:
//! 0 success, 1 validation error, 2 runtime error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fado_core::utility::{ScalingMode, UtilityKind};
use fado_core::valuation::EntropyAlgorithm;

#[derive(Debug, Parser)]
#[command(
    name = "fado",
    version,
    about = "Fairness-aware data valuation: value training instances, preprocess training sets, and benchmark the performance/fairness trade-off"
)]
pub struct Cli {
    /// Cap worker parallelism (default: all cores). Outputs do not
    /// depend on this setting.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset with configurable bias conditions
    Synth(SynthArgs),
    /// Compute per-instance entropy valuations toward Y and each Z
    Value(ValueArgs),
    /// Apply a preprocessing intervention to a training CSV
    Preprocess(PreprocessArgs),
    /// Fit a model grid on one training set and score a test set
    Evaluate(EvaluateArgs),
    /// Run the full intervention-by-grid benchmark
    Benchmark(BenchmarkArgs),
}

/// Column-role flags shared by the CSV-consuming subcommands.
#[derive(Debug, Args)]
pub struct SchemaArgs {
    /// Name of the binary target column
    #[arg(long)]
    pub target: String,
    /// Protected attribute column name(s), comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    pub protected: Vec<String>,
    /// Id column name (row order is used when absent)
    #[arg(long)]
    pub id: Option<String>,
    /// Drop protected columns from the feature matrix instead of keeping
    /// them visible to models
    #[arg(long)]
    pub exclude_protected_features: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Generator spec JSON (fields: n_rows, n_features, group_fractions,
    /// group_prevalences, conditional_shift, shifted_features,
    /// class_separation, seed)
    #[arg(long)]
    pub spec: PathBuf,
    /// Output CSV path
    #[arg(long)]
    pub out: PathBuf,
    /// Override the spec's RNG seed
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ValueArgs {
    /// Input CSV path
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub schema: SchemaArgs,
    /// Entropy algorithm
    #[arg(long, value_enum, default_value = "out-of-bag")]
    pub algorithm: AlgorithmArg,
    /// Number of bags (out-of-bag algorithm)
    #[arg(long, default_value_t = 5)]
    pub n_bags: usize,
    /// Fraction of rows held out per bag, in (0,1)
    #[arg(long, default_value_t = 0.2)]
    pub pct_unseen: f64,
    /// Stratify the out-of-bag dealing by label
    #[arg(long)]
    pub stratified: bool,
    /// JSON file with the model list (defaults to one logistic and one
    /// boosted-trees spec)
    #[arg(long)]
    pub models: Option<PathBuf>,
    /// RNG seed for bagging and default model seeds
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output valuation CSV (columns id,v_y,v_z_<col>...); a config
    /// sidecar is written next to it
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum AlgorithmArg {
    OutOfBag,
    InBag,
}

impl From<AlgorithmArg> for EntropyAlgorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::OutOfBag => EntropyAlgorithm::OutOfBag,
            AlgorithmArg::InBag => EntropyAlgorithm::InBag,
        }
    }
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum MethodArg {
    Uasp,
    Uar,
    Rps,
    Rw,
    None,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum UtilityArg {
    Linear,
    Multiplicative,
    Subtractive,
}

impl From<UtilityArg> for UtilityKind {
    fn from(u: UtilityArg) -> Self {
        match u {
            UtilityArg::Linear => UtilityKind::Linear,
            UtilityArg::Multiplicative => UtilityKind::Multiplicative,
            UtilityArg::Subtractive => UtilityKind::Subtractive,
        }
    }
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum ScalingArg {
    MinMax,
    None,
}

impl From<ScalingArg> for ScalingMode {
    fn from(s: ScalingArg) -> Self {
        match s {
            ScalingArg::MinMax => ScalingMode::MinMax,
            ScalingArg::None => ScalingMode::None,
        }
    }
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Training CSV path
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub schema: SchemaArgs,
    /// Intervention to apply
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Protected column driving prevalence sampling / reweighing
    /// (defaults to the first --protected column)
    #[arg(long)]
    pub on: Option<String>,
    /// Valuations CSV from `fado value` (required for uasp/uar)
    #[arg(long)]
    pub valuations: Option<PathBuf>,
    /// Utility function combining v_y and v_z (uasp/uar)
    #[arg(long, value_enum, default_value = "linear")]
    pub utility: UtilityArg,
    /// Weight on the performance valuation, in [0,1]
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Weight scaling for uar
    #[arg(long, value_enum, default_value = "min-max")]
    pub scaling: ScalingArg,
    /// RNG seed (rps)
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output CSV (input columns plus a weight column); a provenance
    /// sidecar is written next to it
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Training CSV path
    #[arg(long)]
    pub train: PathBuf,
    /// Test CSV path
    #[arg(long)]
    pub test: PathBuf,
    #[command(flatten)]
    pub schema: SchemaArgs,
    /// Per-row weight column in the training CSV (e.g. from
    /// `fado preprocess`)
    #[arg(long)]
    pub weight_column: Option<String>,
    /// Number of boosted-tree configurations to sample
    #[arg(long, default_value_t = 25)]
    pub grid_size: usize,
    /// FPR ceiling for threshold selection
    #[arg(long, default_value_t = 0.05)]
    pub fpr: f64,
    /// RNG seed for grid sampling
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output report JSON
    #[arg(long)]
    pub out: PathBuf,
    /// Optional CSV export of the report points
    #[arg(long)]
    pub points_csv: Option<PathBuf>,
    /// Optional directory for one scatter SVG per fairness metric
    #[arg(long)]
    pub svg_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Benchmark config JSON (data source, interventions, grid,
    /// valuation, fpr_target, seed)
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (report.json, points.csv, config.json, one SVG
    /// per fairness metric)
    #[arg(long, default_value = "fado-benchmark")]
    pub out_dir: PathBuf,
    /// Override the config file's FPR ceiling
    #[arg(long)]
    pub fpr: Option<f64>,
    /// Override the config file's grid size
    #[arg(long)]
    pub grid_size: Option<usize>,
    /// Override the config file's seed (drives every random choice)
    #[arg(long)]
    pub seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(1)
                }
            };
        }
    };

    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: failed to configure {threads} worker threads: {e}");
            return ExitCode::from(2);
        }
    }

    let result = match cli.command {
        Command::Synth(args) => commands::synth(args),
        Command::Value(args) => commands::value(args),
        Command::Preprocess(args) => commands::preprocess(args),
        Command::Evaluate(args) => commands::evaluate(args),
        Command::Benchmark(args) => commands::benchmark(args),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_validation() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
