//! The benchmark harness: preprocess the training set under each
//! intervention, fit a shared hyperparameter grid, score every model on
//! the test set at a fixed FPR ceiling, and summarize the trade-off
//! landscape.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::{LearnerSpec, Model};
use crate::preprocess::{no_intervention, rps, rw, uar, uasp, InterventionKind};
use crate::utility::{compute_utility, UtilityConfig, UtilityKind};
use crate::valuation::{ValuationConfig, ValuationVector};

use super::metrics::{classify, fairness_ratio, threshold_at_fpr, tpr_at_threshold, FairnessMetric};
use super::pareto::{pareto_frontier, rule80_winner};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// One preprocessing arm of the benchmark.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum InterventionSpec {
    None,
    Rps,
    Rw,
    Uasp { utility: UtilityConfig },
    Uar { utility: UtilityConfig },
}

impl InterventionSpec {
    pub fn kind(&self) -> InterventionKind {
        match self {
            InterventionSpec::None => InterventionKind::None,
            InterventionSpec::Rps => InterventionKind::Rps,
            InterventionSpec::Rw => InterventionKind::Rw,
            InterventionSpec::Uasp { .. } => InterventionKind::Uasp,
            InterventionSpec::Uar { .. } => InterventionKind::Uar,
        }
    }

    pub fn is_utility_aware(&self) -> bool {
        matches!(self, InterventionSpec::Uasp { .. } | InterventionSpec::Uar { .. })
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            InterventionSpec::Uasp { utility } | InterventionSpec::Uar { utility } => {
                Some(utility.alpha)
            }
            _ => None,
        }
    }

    /// Short human-readable label used in reports and plots.
    pub fn label(&self) -> String {
        let kind_name = |k: &UtilityKind| match k {
            UtilityKind::Linear => "linear",
            UtilityKind::Multiplicative => "multiplicative",
            UtilityKind::Subtractive => "subtractive",
        };
        match self {
            InterventionSpec::None => "none".into(),
            InterventionSpec::Rps => "rps".into(),
            InterventionSpec::Rw => "rw".into(),
            InterventionSpec::Uasp { utility } => {
                format!("uasp({},alpha={})", kind_name(&utility.kind), utility.alpha)
            }
            InterventionSpec::Uar { utility } => {
                let scaling = match utility.scaling {
                    crate::utility::ScalingMode::MinMax => "min_max",
                    crate::utility::ScalingMode::None => "raw",
                };
                format!(
                    "uar({},alpha={},{scaling})",
                    kind_name(&utility.kind),
                    utility.alpha
                )
            }
        }
    }
}

/// Where the decision threshold is selected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Pick the threshold on the test split itself (figure-reproduction
    /// convention).
    Test,
    /// Carve the trailing `fraction` of the training rows into a
    /// validation split and pick the threshold there.
    Validation { fraction: f64 },
}

impl Default for ThresholdMode {
    fn default() -> Self {
        ThresholdMode::Test
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    /// Protected column whose groups are compared in the fairness ratios.
    pub protected_column: String,
    pub interventions: Vec<InterventionSpec>,
    /// Learner grid shared across every intervention.
    pub grid: Vec<LearnerSpec>,
    /// Valuation settings backing the utility-aware interventions.
    pub valuation: ValuationConfig,
    /// FPR ceiling for threshold selection.
    pub fpr_target: f64,
    #[serde(default)]
    pub threshold_mode: ThresholdMode,
    /// Seed for the random-sampling baseline.
    pub seed: u64,
}

/// The α grid used for benchmark sweeps: {0, 0.1, …, 1}.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..=10).map(|k| f64::from(k) / 10.0).collect()
}

impl BenchmarkConfig {
    /// The standard arm set: no intervention, the two baselines, and a
    /// linear-utility α sweep for both utility-aware interventions.
    pub fn standard_interventions(alpha_grid: &[f64]) -> Vec<InterventionSpec> {
        let mut arms = vec![
            InterventionSpec::None,
            InterventionSpec::Rps,
            InterventionSpec::Rw,
        ];
        for &alpha in alpha_grid {
            arms.push(InterventionSpec::Uasp {
                utility: UtilityConfig::linear(alpha),
            });
        }
        for &alpha in alpha_grid {
            arms.push(InterventionSpec::Uar {
                utility: UtilityConfig::linear(alpha),
            });
        }
        arms
    }

    fn validate(&self) -> Result<()> {
        if self.interventions.is_empty() {
            return Err(Error::Validation("no interventions configured".into()));
        }
        if self.grid.is_empty() {
            return Err(Error::Validation("the learner grid is empty".into()));
        }
        for spec in &self.grid {
            spec.validate_grid_ranges()?;
        }
        for arm in &self.interventions {
            if let InterventionSpec::Uasp { utility } | InterventionSpec::Uar { utility } = arm {
                utility.validate()?;
            }
        }
        if !(self.fpr_target > 0.0 && self.fpr_target < 1.0) {
            return Err(Error::Validation(format!(
                "fpr_target must be in (0,1), got {}",
                self.fpr_target
            )));
        }
        if let ThresholdMode::Validation { fraction } = self.threshold_mode {
            if !(fraction > 0.0 && fraction < 1.0) {
                return Err(Error::Validation(format!(
                    "validation fraction must be in (0,1), got {fraction}"
                )));
            }
        }
        Ok(())
    }
}

/// One (intervention, model) cell of the benchmark.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalPoint {
    /// Index into the learner grid.
    pub model_id: usize,
    pub intervention: String,
    pub intervention_index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// TPR at the FPR ceiling.
    pub performance: f64,
    pub fairness: BTreeMap<FairnessMetric, f64>,
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub fpr_target: f64,
    pub points: Vec<EvalPoint>,
    /// Frontier point indices per fairness metric, ascending.
    pub pareto: BTreeMap<FairnessMetric, Vec<usize>>,
    /// 80%-rule winner index per fairness metric.
    pub rule80: BTreeMap<FairnessMetric, Option<usize>>,
    pub config: BenchmarkConfig,
    pub warnings: Vec<String>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<EvalReport> {
        let report: EvalReport = serde_json::from_str(text)?;
        if report.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::Validation(format!(
                "unsupported report schema_version {}",
                report.schema_version
            )));
        }
        Ok(report)
    }

    /// Flat CSV export of the points array.
    pub fn write_points_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path.as_ref())?;
        let mut header = vec![
            "point".to_string(),
            "intervention".to_string(),
            "alpha".to_string(),
            "model_id".to_string(),
            "performance".to_string(),
            "threshold".to_string(),
        ];
        header.extend(FairnessMetric::all().iter().map(|m| m.to_string()));
        wtr.write_record(&header)?;
        let mut buf = String::new();
        let fmt = |v: f64, buf: &mut String| {
            buf.clear();
            write!(buf, "{v}").expect("formatting f64 cannot fail");
            buf.clone()
        };
        for (i, p) in self.points.iter().enumerate() {
            let mut record = vec![
                i.to_string(),
                p.intervention.clone(),
                p.alpha.map(|a| fmt(a, &mut buf)).unwrap_or_default(),
                p.model_id.to_string(),
                fmt(p.performance, &mut buf),
                fmt(p.threshold, &mut buf),
            ];
            for metric in FairnessMetric::all() {
                record.push(fmt(p.fairness[&metric], &mut buf));
            }
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Fit one spec on a prepared training set and score it on the test
/// split: TPR at the FPR ceiling, all fairness ratios, and the threshold
/// used. The threshold comes from `validation` scores when given, from
/// the test scores otherwise.
fn score_cell(
    spec: &LearnerSpec,
    train: &Dataset,
    weights: Option<&[f64]>,
    test: &Dataset,
    test_groups: &[u32],
    validation: Option<&Dataset>,
    fpr_target: f64,
) -> Result<(f64, BTreeMap<FairnessMetric, f64>, f64)> {
    let model = Model::fit(spec, train.features(), train.target(), weights)?;
    let test_scores = model.predict_proba(test.features())?;
    let threshold = match validation {
        None => threshold_at_fpr(&test_scores, test.target(), fpr_target)?,
        Some(val) => {
            let val_scores = model.predict_proba(val.features())?;
            threshold_at_fpr(&val_scores, val.target(), fpr_target)?
        }
    };
    let performance = tpr_at_threshold(&test_scores, test.target(), threshold)?;
    let preds = classify(&test_scores, threshold);
    let mut fairness = BTreeMap::new();
    for metric in FairnessMetric::all() {
        fairness.insert(
            metric,
            fairness_ratio(&preds, test.target(), test_groups, metric)?,
        );
    }
    Ok((performance, fairness, threshold))
}

/// Fit every grid spec on one prepared training set (optionally weighted)
/// and score the test split. The single-arm building block behind
/// [`run_benchmark`], exposed for scoring externally preprocessed data.
pub fn evaluate_grid(
    train: &Dataset,
    weights: Option<&[f64]>,
    test: &Dataset,
    protected_column: &str,
    grid: &[LearnerSpec],
    fpr_target: f64,
    label: &str,
) -> Result<Vec<EvalPoint>> {
    if grid.is_empty() {
        return Err(Error::Validation("the learner grid is empty".into()));
    }
    check_test_evaluable(test, protected_column)?;
    let test_groups: Vec<u32> = test.protected_column(protected_column)?.groups.clone();
    let results: Vec<Result<EvalPoint>> = grid
        .par_iter()
        .enumerate()
        .map(|(mi, spec)| {
            score_cell(spec, train, weights, test, &test_groups, None, fpr_target)
                .map(|(performance, fairness, threshold)| EvalPoint {
                    model_id: mi,
                    intervention: label.to_string(),
                    intervention_index: 0,
                    alpha: None,
                    performance,
                    fairness,
                    threshold,
                })
                .map_err(|e| e.with_context(&format!("model {mi}")))
        })
        .collect();
    results.into_iter().collect()
}

/// Check that the test split can support every fairness ratio before any
/// training happens.
fn check_test_evaluable(test: &Dataset, protected_column: &str) -> Result<()> {
    let col = test.protected_column(protected_column)?;
    let present = col.present_groups();
    if present.len() != 2 {
        return Err(Error::Validation(format!(
            "test split needs exactly 2 groups in `{protected_column}`, found {}",
            present.len()
        )));
    }
    for &g in &present {
        let pos = col
            .groups
            .iter()
            .zip(test.target())
            .filter(|(gi, y)| **gi == g && **y == 1)
            .count();
        let neg = col
            .groups
            .iter()
            .zip(test.target())
            .filter(|(gi, y)| **gi == g && **y == 0)
            .count();
        if pos == 0 || neg == 0 {
            return Err(Error::Validation(format!(
                "test group {g} lacks {} rows, fairness ratios are undefined",
                if pos == 0 { "positive" } else { "negative" }
            )));
        }
    }
    Ok(())
}

/// Run the full benchmark: every intervention arm is applied to the
/// training data, the same learner grid (identical specs and seeds) is
/// fitted on each arm's output, and every fitted model is scored on the
/// test set. Deterministic given the config, independent of thread
/// count: cells run in parallel but are assembled in (intervention,
/// model) order.
pub fn run_benchmark(train: &Dataset, test: &Dataset, cfg: &BenchmarkConfig) -> Result<EvalReport> {
    cfg.validate()?;
    if train.feature_names() != test.feature_names() {
        return Err(Error::Validation(
            "train and test splits have different feature columns".into(),
        ));
    }
    check_test_evaluable(test, &cfg.protected_column)?;

    let mut warnings = Vec::new();

    // In validation mode the threshold split is carved off the training
    // rows before valuation and preprocessing.
    let (train_base, validation) = match cfg.threshold_mode {
        ThresholdMode::Test => (train.clone(), None),
        ThresholdMode::Validation { fraction } => {
            let split = train.split_ordered(1.0 - fraction)?;
            warnings.extend(split.warnings.iter().map(|w| format!("validation carve: {w}")));
            (split.train, Some(split.test))
        }
    };

    let valuations: Option<ValuationVector> =
        if cfg.interventions.iter().any(InterventionSpec::is_utility_aware) {
            let v = ValuationVector::compute(&train_base, &cfg.valuation)
                .map_err(|e| e.with_context("valuation"))?;
            warnings.extend(v.warnings.iter().cloned());
            Some(v)
        } else {
            None
        };

    struct Arm {
        label: String,
        alpha: Option<f64>,
        data: Dataset,
        weights: Vec<f64>,
    }

    let mut arms = Vec::with_capacity(cfg.interventions.len());
    for (ii, spec) in cfg.interventions.iter().enumerate() {
        let context = format!("intervention {} (`{}`)", ii, spec.label());
        let result = match spec {
            InterventionSpec::None => no_intervention(&train_base),
            InterventionSpec::Rps => rps(&train_base, &cfg.protected_column, cfg.seed)
                .map_err(|e| e.with_context(&context))?,
            InterventionSpec::Rw => {
                rw(&train_base, &cfg.protected_column).map_err(|e| e.with_context(&context))?
            }
            InterventionSpec::Uasp { utility } => {
                let u = compute_utility(valuations.as_ref().unwrap(), utility)
                    .map_err(|e| e.with_context(&context))?;
                uasp(&train_base, &u, &cfg.protected_column)
                    .map_err(|e| e.with_context(&context))?
            }
            InterventionSpec::Uar { utility } => {
                let u = compute_utility(valuations.as_ref().unwrap(), utility)
                    .map_err(|e| e.with_context(&context))?;
                uar(&train_base, &u, utility.scaling).map_err(|e| e.with_context(&context))?
            }
        };
        warnings.extend(result.warnings.iter().map(|w| format!("{context}: {w}")));
        let (data, weights) = result.apply(&train_base).map_err(|e| e.with_context(&context))?;
        arms.push(Arm {
            label: spec.label(),
            alpha: spec.alpha(),
            data,
            weights,
        });
    }

    let cells: Vec<(usize, usize)> = (0..arms.len())
        .flat_map(|ii| (0..cfg.grid.len()).map(move |mi| (ii, mi)))
        .collect();
    let test_groups: Vec<u32> = test
        .protected_column(&cfg.protected_column)?
        .groups
        .clone();

    let results: Vec<Result<EvalPoint>> = cells
        .par_iter()
        .map(|&(ii, mi)| {
            let arm = &arms[ii];
            let spec = &cfg.grid[mi];
            let context = format!("intervention `{}`, model {mi}", arm.label);
            score_cell(
                spec,
                &arm.data,
                Some(&arm.weights),
                test,
                &test_groups,
                validation.as_ref(),
                cfg.fpr_target,
            )
            .map(|(performance, fairness, threshold)| EvalPoint {
                model_id: mi,
                intervention: arm.label.clone(),
                intervention_index: ii,
                alpha: arm.alpha,
                performance,
                fairness,
                threshold,
            })
            .map_err(|e| e.with_context(&context))
        })
        .collect();

    let mut points = Vec::with_capacity(results.len());
    for result in results {
        points.push(result?);
    }

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

    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        fpr_target: cfg.fpr_target,
        points,
        pareto,
        rule80,
        config: cfg.clone(),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_interventions_cover_the_protocol() {
        let arms = BenchmarkConfig::standard_interventions(&default_alpha_grid());
        // none + rps + rw + 11 uasp + 11 uar
        assert_eq!(arms.len(), 25);
        assert_eq!(arms.iter().filter(|a| a.is_utility_aware()).count(), 22);
    }

    #[test]
    fn alpha_grid_is_the_eleven_point_sweep() {
        let grid = default_alpha_grid();
        assert_eq!(grid.len(), 11);
        assert_eq!(grid[0], 0.0);
        assert_eq!(grid[10], 1.0);
        assert!((grid[3] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn intervention_labels() {
        assert_eq!(InterventionSpec::None.label(), "none");
        let arm = InterventionSpec::Uar {
            utility: UtilityConfig::linear(0.3),
        };
        assert_eq!(arm.label(), "uar(linear,alpha=0.3,min_max)");
    }
}
