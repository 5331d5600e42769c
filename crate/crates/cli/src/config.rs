//! Benchmark config file handling: JSON schema, defaults, and merging
//! with command-line overrides (flags win over file values).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use fado_core::dataset::{Dataset, DatasetSchema};
use fado_core::error::{Error, Result};
use fado_core::evaluation::{
    default_alpha_grid, BenchmarkConfig, InterventionSpec, ThresholdMode,
};
use fado_core::learners::{sample_grid, sample_grid_with, GbdtGridRanges, LearnerKind, LearnerSpec};
use fado_core::synthgen::{generate, BiasSpec};
use fado_core::valuation::ValuationConfig;

/// On-disk benchmark configuration. Exactly one data source must be
/// given: CSV paths plus a schema, or a synthetic generator spec.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchFileConfig {
    // csv source
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<DatasetSchema>,

    // synthetic source
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<BiasSpec>,
    /// Row-order train fraction for the synthetic source (default 0.75).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_fraction: Option<f64>,

    /// Protected column evaluated for fairness (default: the first one).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protected_column: Option<String>,

    /// Full intervention list; when absent a standard sweep is built from
    /// `alpha_grid`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interventions: Option<Vec<InterventionSpec>>,
    /// α values for the standard sweep (default {0, 0.1, …, 1}).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_grid: Option<Vec<f64>>,

    /// Explicit learner grid; when absent `grid_size` configurations are
    /// sampled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<LearnerSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<usize>,
    /// Lift the desk-scale 500-tree cap to the full 10000-tree ceiling.
    #[serde(default)]
    pub full_grid_ranges: bool,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valuation: Option<ValuationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fpr_target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_mode: Option<ThresholdMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Flag-level overrides for the file config.
#[derive(Default)]
pub struct BenchOverrides {
    pub fpr: Option<f64>,
    pub grid_size: Option<usize>,
    pub seed: Option<u64>,
}

pub struct ResolvedBenchmark {
    pub train: Dataset,
    pub test: Dataset,
    pub config: BenchmarkConfig,
    /// The merged file config, echoed to the output directory.
    pub merged: BenchFileConfig,
    pub warnings: Vec<String>,
}

pub fn load_file(path: &Path) -> Result<BenchFileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))?;
    let cfg: BenchFileConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Validation(format!("invalid config {}: {e}", path.display())))?;
    Ok(cfg)
}

/// Merge overrides into the file config and materialize datasets, grid,
/// and the core benchmark config. Every random choice derives from the
/// resolved seed: the generator uses it directly, grid sampling uses
/// seed+1, valuation seed+2, and the sampling baseline seed+3 (explicit
/// file values win).
pub fn resolve(mut file: BenchFileConfig, overrides: BenchOverrides) -> Result<ResolvedBenchmark> {
    if let Some(fpr) = overrides.fpr {
        file.fpr_target = Some(fpr);
    }
    if let Some(gs) = overrides.grid_size {
        file.grid_size = Some(gs);
        file.grid = None;
    }
    if let Some(seed) = overrides.seed {
        file.seed = Some(seed);
        if let Some(synth) = &mut file.synth {
            synth.seed = seed;
        }
    }
    let seed = file.seed.unwrap_or(42);
    file.seed = Some(seed);

    let mut warnings = Vec::new();
    let (train, test) = match (&file.synth, &file.train_csv, &file.test_csv) {
        (Some(spec), None, None) => {
            let data = generate(spec)?;
            let split = data.split_ordered(file.train_fraction.unwrap_or(0.75))?;
            warnings.extend(split.warnings);
            (split.train, split.test)
        }
        (None, Some(train_path), Some(test_path)) => {
            let schema = file.schema.clone().ok_or_else(|| {
                Error::Validation("csv data source requires a `schema` section".into())
            })?;
            (
                Dataset::load_csv(train_path, &schema)?,
                Dataset::load_csv(test_path, &schema)?,
            )
        }
        _ => {
            return Err(Error::Validation(
                "config must provide either `synth` or both `train_csv` and `test_csv`".into(),
            ))
        }
    };

    let protected_column = match &file.protected_column {
        Some(name) => {
            train.protected_column(name)?;
            name.clone()
        }
        None => train
            .protected()
            .first()
            .map(|c| c.name.clone())
            .ok_or_else(|| Error::Validation("dataset has no protected columns".into()))?,
    };

    let grid = match &file.grid {
        Some(grid) => grid.clone(),
        None => {
            let size = file.grid_size.unwrap_or(25);
            if file.full_grid_ranges {
                sample_grid_with(
                    LearnerKind::GradientBoostedTrees,
                    &GbdtGridRanges::full(),
                    size,
                    seed.wrapping_add(1),
                )?
            } else {
                sample_grid(LearnerKind::GradientBoostedTrees, size, seed.wrapping_add(1))?
            }
        }
    };

    let valuation = file.valuation.clone().unwrap_or_else(|| ValuationConfig {
        seed: seed.wrapping_add(2),
        ..ValuationConfig::default()
    });

    let interventions = match &file.interventions {
        Some(list) => list.clone(),
        None => {
            let alphas = file.alpha_grid.clone().unwrap_or_else(default_alpha_grid);
            BenchmarkConfig::standard_interventions(&alphas)
        }
    };

    let config = BenchmarkConfig {
        protected_column,
        interventions,
        grid,
        valuation,
        fpr_target: file.fpr_target.unwrap_or(0.05),
        threshold_mode: file.threshold_mode.unwrap_or_default(),
        seed: seed.wrapping_add(3),
    };

    Ok(ResolvedBenchmark {
        train,
        test,
        config,
        merged: file,
        warnings,
    })
}
