//! Subcommand implementations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use fado_core::dataset::{Dataset, DatasetSchema};
use fado_core::error::{Error, Result};
use fado_core::evaluation::{
    evaluate_grid, pareto_frontier, run_benchmark, rule80_winner, scatter_svg, BenchmarkConfig,
    EvalReport, FairnessMetric, InterventionSpec, ThresholdMode, REPORT_SCHEMA_VERSION,
};
use fado_core::learners::{sample_grid, LearnerKind, LearnerSpec};
use fado_core::preprocess::{no_intervention, rps, rw, uar, uasp, InterventionResult};
use fado_core::synthgen::{generate, BiasSpec};
use fado_core::utility::{compute_utility, UtilityConfig};
use fado_core::valuation::{ValuationConfig, ValuationVector};

use crate::{
    BenchmarkArgs, EvaluateArgs, MethodArg, PreprocessArgs, SchemaArgs, SynthArgs, ValueArgs,
};

fn dataset_schema(args: &SchemaArgs) -> DatasetSchema {
    DatasetSchema {
        target_column: args.target.clone(),
        protected_columns: args.protected.clone(),
        id_column: args.id.clone(),
        ignore_columns: Vec::new(),
        include_protected_in_features: !args.exclude_protected_features,
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

/// `<out>.json` next to an output file, for config/provenance sidecars.
fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn synth(args: SynthArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.spec)
        .map_err(|e| Error::Validation(format!("cannot read {}: {e}", args.spec.display())))?;
    let mut spec: BiasSpec = serde_json::from_str(&text)
        .map_err(|e| Error::Validation(format!("invalid spec {}: {e}", args.spec.display())))?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let data = generate(&spec)?;
    data.write_csv(&args.out)?;
    write_json(&sidecar_path(&args.out), &spec)?;
    eprintln!(
        "wrote {} rows x {} features to {}",
        data.n_rows(),
        data.n_features(),
        args.out.display()
    );
    Ok(())
}

pub fn value(args: ValueArgs) -> Result<()> {
    let schema = dataset_schema(&args.schema);
    let data = Dataset::load_csv(&args.input, &schema)?;
    let models = match &args.models {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))?;
            let models: Vec<LearnerSpec> = serde_json::from_str(&text)
                .map_err(|e| Error::Validation(format!("invalid model list: {e}")))?;
            models
        }
        None => LearnerSpec::default_pair(args.seed),
    };
    let cfg = ValuationConfig {
        algorithm: args.algorithm.into(),
        n_bags: args.n_bags,
        pct_unseen: args.pct_unseen,
        models,
        stratified: args.stratified,
        seed: args.seed,
    };
    let valuations = ValuationVector::compute(&data, &cfg)?;
    for w in &valuations.warnings {
        eprintln!("warning: {w}");
    }
    valuations.write_csv(&args.out)?;
    valuations.write_sidecar(sidecar_path(&args.out))?;
    eprintln!(
        "wrote valuations for {} rows to {}",
        valuations.ids.len(),
        args.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct PreprocessSidecar<'a> {
    method: String,
    kept_rows: usize,
    input_rows: usize,
    provenance: &'a fado_core::preprocess::InterventionProvenance,
    warnings: &'a [String],
}

pub fn preprocess(args: PreprocessArgs) -> Result<()> {
    let schema = dataset_schema(&args.schema);
    let data = Dataset::load_csv(&args.input, &schema)?;
    let column = args
        .on
        .clone()
        .unwrap_or_else(|| args.schema.protected[0].clone());

    let utilities = |args: &PreprocessArgs| -> Result<_> {
        let path = args.valuations.as_ref().ok_or_else(|| {
            Error::Validation("--valuations is required for utility-aware methods".into())
        })?;
        let valuations = ValuationVector::read_csv(path)?;
        let cfg = UtilityConfig {
            kind: args.utility.into(),
            alpha: args.alpha,
            scaling: args.scaling.into(),
            ..UtilityConfig::default()
        };
        compute_utility(&valuations, &cfg)
    };

    let result: InterventionResult = match args.method {
        MethodArg::None => no_intervention(&data),
        MethodArg::Rw => rw(&data, &column)?,
        MethodArg::Rps => rps(&data, &column, args.seed)?,
        MethodArg::Uasp => uasp(&data, &utilities(&args)?, &column)?,
        MethodArg::Uar => uar(&data, &utilities(&args)?, args.scaling.into())?,
    };
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let (subset, weights) = result.apply(&data)?;
    subset.write_csv_with_weights(&args.out, &weights)?;
    write_json(
        &sidecar_path(&args.out),
        &PreprocessSidecar {
            method: result.kind.to_string(),
            kept_rows: subset.n_rows(),
            input_rows: data.n_rows(),
            provenance: &result.provenance,
            warnings: &result.warnings,
        },
    )?;
    eprintln!(
        "kept {} of {} rows; wrote {}",
        subset.n_rows(),
        data.n_rows(),
        args.out.display()
    );
    Ok(())
}

/// Read a numeric column from a CSV file (for precomputed weights).
fn read_weight_column(path: &Path, column: &str) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let idx = reader
        .headers()?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Error::Schema(format!("column `{column}` not found in {}", path.display())))?;
    let mut out = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let record = record?;
        let cell = record[idx].trim();
        let w: f64 = cell.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            row: row_no + 1,
            column: column.to_string(),
            message: format!("`{cell}` is not a number"),
        })?;
        out.push(w);
    }
    Ok(out)
}

fn write_svgs(report: &EvalReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for metric in FairnessMetric::all() {
        let svg = scatter_svg(report, metric);
        std::fs::write(dir.join(format!("scatter_{metric}.svg")), svg)?;
    }
    Ok(())
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let mut schema = dataset_schema(&args.schema);
    if let Some(w) = &args.weight_column {
        schema.ignore_columns.push(w.clone());
    }
    let train = Dataset::load_csv(&args.train, &schema)?;
    // the test split never carries weights
    schema.ignore_columns.clear();
    let test = Dataset::load_csv(&args.test, &schema)?;
    let weights = args
        .weight_column
        .as_ref()
        .map(|w| read_weight_column(&args.train, w))
        .transpose()?;
    let protected_column = args.schema.protected[0].clone();
    let grid = sample_grid(LearnerKind::GradientBoostedTrees, args.grid_size, args.seed)?;

    let points = evaluate_grid(
        &train,
        weights.as_deref(),
        &test,
        &protected_column,
        &grid,
        args.fpr,
        "evaluate",
    )?;

    let mut pareto = BTreeMap::new();
    let mut rule80 = BTreeMap::new();
    for metric in FairnessMetric::all() {
        let coords: Vec<(f64, f64)> = points
            .iter()
            .map(|p| (p.performance, p.fairness[&metric]))
            .collect();
        pareto.insert(metric, pareto_frontier(&coords));
        rule80.insert(metric, rule80_winner(&points, metric));
    }
    let report = EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        fpr_target: args.fpr,
        points,
        pareto,
        rule80,
        config: BenchmarkConfig {
            protected_column,
            interventions: vec![InterventionSpec::None],
            grid,
            valuation: ValuationConfig::default(),
            fpr_target: args.fpr,
            threshold_mode: ThresholdMode::Test,
            seed: args.seed,
        },
        warnings: Vec::new(),
    };
    std::fs::write(&args.out, report.to_json()?)?;
    if let Some(path) = &args.points_csv {
        report.write_points_csv(path)?;
    }
    if let Some(dir) = &args.svg_dir {
        write_svgs(&report, dir)?;
    }
    eprintln!(
        "scored {} models; wrote {}",
        report.points.len(),
        args.out.display()
    );
    Ok(())
}

pub fn benchmark(args: BenchmarkArgs) -> Result<()> {
    let file = crate::config::load_file(&args.config)?;
    let resolved = crate::config::resolve(
        file,
        crate::config::BenchOverrides {
            fpr: args.fpr,
            grid_size: args.grid_size,
            seed: args.seed,
        },
    )?;
    for w in &resolved.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!(
        "benchmark: {} interventions x {} models, train n={} test n={}",
        resolved.config.interventions.len(),
        resolved.config.grid.len(),
        resolved.train.n_rows(),
        resolved.test.n_rows()
    );

    let report = run_benchmark(&resolved.train, &resolved.test, &resolved.config)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }

    std::fs::create_dir_all(&args.out_dir)?;
    std::fs::write(args.out_dir.join("report.json"), report.to_json()?)?;
    report.write_points_csv(args.out_dir.join("points.csv"))?;
    write_json(&args.out_dir.join("config.json"), &resolved.merged)?;
    write_svgs(&report, &args.out_dir)?;
    eprintln!(
        "wrote {} points to {}",
        report.points.len(),
        args.out_dir.display()
    );
    Ok(())
}
