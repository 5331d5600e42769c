//! Weighted binary classifiers behind a single fit/predict-probability
//! contract.
//!
//! Two families are provided: full-batch weighted logistic regression and
//! gradient boosted regression trees on the logistic loss. Both accept
//! per-row sample weights, treat an omitted weight vector as all-ones,
//! and guarantee that zero-weight rows have no influence on the fit.
//! Fits are deterministic and internally single-threaded; models are
//! immutable and safe to share across threads.

mod gbdt;
mod grid;
mod logistic;

pub use gbdt::GbdtModel;
pub use grid::{sample_grid, sample_grid_with, GbdtGridRanges};
pub use logistic::LogisticModel;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities are clamped away from {0,1} so downstream logarithms
/// (entropy, log-loss) stay finite.
pub const PROBABILITY_CLAMP: f64 = 1e-12;

pub(crate) fn clamp_probability(p: f64) -> f64 {
    p.clamp(PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP)
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Model family of a [`LearnerSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    LogisticRegression,
    GradientBoostedTrees,
}

/// Hyperparameter bundle for one learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerSpec {
    LogisticRegression {
        learning_rate: f64,
        epochs: usize,
        l2: f64,
        seed: u64,
    },
    GradientBoostedTrees {
        n_estimators: usize,
        num_leaves: usize,
        min_child_samples: usize,
        max_depth: usize,
        learning_rate: f64,
        seed: u64,
    },
}

impl LearnerSpec {
    pub fn kind(&self) -> LearnerKind {
        match self {
            LearnerSpec::LogisticRegression { .. } => LearnerKind::LogisticRegression,
            LearnerSpec::GradientBoostedTrees { .. } => LearnerKind::GradientBoostedTrees,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            LearnerSpec::LogisticRegression { seed, .. } => *seed,
            LearnerSpec::GradientBoostedTrees { seed, .. } => *seed,
        }
    }

    /// Conservative default logistic spec.
    pub fn default_logistic(seed: u64) -> LearnerSpec {
        LearnerSpec::LogisticRegression {
            learning_rate: 0.5,
            epochs: 200,
            l2: 1e-4,
            seed,
        }
    }

    /// Conservative default boosted-trees spec.
    pub fn default_gbdt(seed: u64) -> LearnerSpec {
        LearnerSpec::GradientBoostedTrees {
            n_estimators: 100,
            num_leaves: 31,
            min_child_samples: 50,
            max_depth: 8,
            learning_rate: 0.1,
        seed,
        }
    }

    /// Default valuation model set: one logistic spec and one boosted-trees
    /// spec, both user-overridable.
    pub fn default_pair(seed: u64) -> Vec<LearnerSpec> {
        vec![Self::default_logistic(seed), Self::default_gbdt(seed)]
    }

    /// Structural sanity of the hyperparameters (used by every fit).
    pub fn validate(&self) -> Result<()> {
        match self {
            LearnerSpec::LogisticRegression {
                learning_rate,
                epochs,
                l2,
                ..
            } => {
                if !(learning_rate.is_finite() && *learning_rate > 0.0) {
                    return Err(Error::Validation("logistic learning_rate must be positive".into()));
                }
                if *epochs == 0 {
                    return Err(Error::Validation("logistic epochs must be at least 1".into()));
                }
                if !(l2.is_finite() && *l2 >= 0.0) {
                    return Err(Error::Validation("logistic l2 must be nonnegative".into()));
                }
            }
            LearnerSpec::GradientBoostedTrees {
                num_leaves,
                min_child_samples,
                max_depth,
                learning_rate,
                ..
            } => {
                if *num_leaves < 2 {
                    return Err(Error::Validation("num_leaves must be at least 2".into()));
                }
                if *min_child_samples == 0 {
                    return Err(Error::Validation("min_child_samples must be at least 1".into()));
                }
                if *max_depth == 0 {
                    return Err(Error::Validation("max_depth must be at least 1".into()));
                }
                if !(learning_rate.is_finite() && *learning_rate > 0.0) {
                    return Err(Error::Validation("boosting learning_rate must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Check boosted-tree hyperparameters against the benchmark grid
    /// ranges: n_estimators ∈ [20,10000], num_leaves ∈ [10,1000],
    /// min_child_samples ∈ [5,300], max_depth ∈ [2,20],
    /// learning_rate ∈ [0.02,0.5]. Logistic specs only need structural
    /// validity.
    pub fn validate_grid_ranges(&self) -> Result<()> {
        self.validate()?;
        if let LearnerSpec::GradientBoostedTrees {
            n_estimators,
            num_leaves,
            min_child_samples,
            max_depth,
            learning_rate,
            ..
        } = self
        {
            let checks: [(&str, f64, f64, f64); 5] = [
                ("n_estimators", *n_estimators as f64, 20.0, 10_000.0),
                ("num_leaves", *num_leaves as f64, 10.0, 1_000.0),
                ("min_child_samples", *min_child_samples as f64, 5.0, 300.0),
                ("max_depth", *max_depth as f64, 2.0, 20.0),
                ("learning_rate", *learning_rate, 0.02, 0.5),
            ];
            for (name, v, lo, hi) in checks {
                if v < lo || v > hi {
                    return Err(Error::Validation(format!(
                        "{name}={v} outside grid range [{lo},{hi}]"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A fitted classifier. `predict_proba` requires the same feature count
/// the model was fitted with.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Model {
    Logistic(LogisticModel),
    GradientBoosted(GbdtModel),
}

/// Envelope for model files so the format can evolve.
#[derive(Serialize, Deserialize)]
struct ModelArtifact {
    format_version: u32,
    model: Model,
}

const MODEL_FORMAT_VERSION: u32 = 1;

impl Model {
    /// Fit `spec` on `(x, y)` with optional nonnegative per-row weights.
    ///
    /// An omitted weight vector is equivalent to all-ones. Rows with zero
    /// weight have no influence on the fit. The effective training set
    /// must contain both classes with positive weight.
    pub fn fit(
        spec: &LearnerSpec,
        x: ArrayView2<'_, f64>,
        y: &[u8],
        weights: Option<&[f64]>,
    ) -> Result<Model> {
        Self::fit_impl(spec, x, y, weights, true)
    }

    /// Fit without the both-classes check; the model collapses toward the
    /// class prior on a single-class set. Exposed for tests only.
    #[doc(hidden)]
    pub fn fit_unguarded(
        spec: &LearnerSpec,
        x: ArrayView2<'_, f64>,
        y: &[u8],
        weights: Option<&[f64]>,
    ) -> Result<Model> {
        Self::fit_impl(spec, x, y, weights, false)
    }

    fn fit_impl(
        spec: &LearnerSpec,
        x: ArrayView2<'_, f64>,
        y: &[u8],
        weights: Option<&[f64]>,
        require_both_classes: bool,
    ) -> Result<Model> {
        spec.validate()?;
        let n = x.nrows();
        if n == 0 {
            return Err(Error::Validation("cannot fit on an empty training set".into()));
        }
        if y.len() != n {
            return Err(Error::Validation(format!(
                "feature rows ({n}) and labels ({}) disagree",
                y.len()
            )));
        }
        if let Some(w) = weights {
            if w.len() != n {
                return Err(Error::Validation(format!(
                    "feature rows ({n}) and weights ({}) disagree",
                    w.len()
                )));
            }
            for (i, wi) in w.iter().enumerate() {
                if !wi.is_finite() {
                    return Err(Error::Validation(format!("non-finite weight at row {i}")));
                }
                if *wi < 0.0 {
                    return Err(Error::Validation(format!("negative weight at row {i}")));
                }
            }
        }
        if let Some(bad) = y.iter().position(|v| *v > 1) {
            return Err(Error::Validation(format!(
                "label at row {bad} is not in {{0,1}}"
            )));
        }
        if let Some(((r, c), v)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite feature value {v} at row {r}, column {c}"
            )));
        }
        if require_both_classes {
            let effective = |cls: u8| {
                y.iter().enumerate().any(|(i, yi)| {
                    *yi == cls && weights.map_or(true, |w| w[i] > 0.0)
                })
            };
            if !effective(0) || !effective(1) {
                return Err(Error::Validation(
                    "effective training set (positive-weight rows) must contain both classes".into(),
                ));
            }
        }

        match spec {
            LearnerSpec::LogisticRegression { .. } => {
                Ok(Model::Logistic(LogisticModel::fit(spec, x, y, weights)?))
            }
            LearnerSpec::GradientBoostedTrees { .. } => {
                Ok(Model::GradientBoosted(GbdtModel::fit(spec, x, y, weights)?))
            }
        }
    }

    /// Per-row probability of the positive class, in
    /// `[PROBABILITY_CLAMP, 1 - PROBABILITY_CLAMP]`.
    pub fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features() {
            return Err(Error::Validation(format!(
                "model was fitted on {} features, got {}",
                self.n_features(),
                x.ncols()
            )));
        }
        Ok(match self {
            Model::Logistic(m) => m.predict_proba(x),
            Model::GradientBoosted(m) => m.predict_proba(x),
        })
    }

    pub fn n_features(&self) -> usize {
        match self {
            Model::Logistic(m) => m.n_features(),
            Model::GradientBoosted(m) => m.n_features(),
        }
    }

    pub fn spec(&self) -> &LearnerSpec {
        match self {
            Model::Logistic(m) => &m.spec,
            Model::GradientBoosted(m) => &m.spec,
        }
    }

    /// Serialize to a versioned JSON artifact.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ModelArtifact {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })?)
    }

    /// Load a model from a versioned JSON artifact.
    pub fn from_json(text: &str) -> Result<Model> {
        let artifact: ModelArtifact = serde_json::from_str(text)?;
        if artifact.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Validation(format!(
                "unsupported model format_version {}",
                artifact.format_version
            )));
        }
        Ok(artifact.model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn xor_free_data() -> (Array2<f64>, Vec<u8>) {
        // 8 rows, linearly separable on f0
        let x = Array2::from_shape_vec(
            (8, 2),
            vec![
                -2.0, 0.3, -1.5, -0.2, -1.0, 0.8, -0.5, 0.1, 0.5, -0.4, 1.0, 0.2, 1.5, 0.6, 2.0,
                -0.1,
            ],
        )
        .unwrap();
        let y = vec![0, 0, 0, 0, 1, 1, 1, 1];
        (x, y)
    }

    #[test]
    fn zero_weight_on_one_class_is_error() {
        let (x, y) = xor_free_data();
        let w: Vec<f64> = y.iter().map(|yi| if *yi == 1 { 0.0 } else { 1.0 }).collect();
        let err = Model::fit(&LearnerSpec::default_logistic(0), x.view(), &y, Some(&w)).unwrap_err();
        assert!(err.to_string().contains("both classes"));
    }

    #[test]
    fn non_finite_weight_is_error() {
        let (x, y) = xor_free_data();
        let mut w = vec![1.0; 8];
        w[3] = f64::NAN;
        assert!(Model::fit(&LearnerSpec::default_logistic(0), x.view(), &y, Some(&w)).is_err());
        w[3] = -1.0;
        assert!(Model::fit(&LearnerSpec::default_logistic(0), x.view(), &y, Some(&w)).is_err());
    }

    #[test]
    fn dimension_mismatch_on_predict() {
        let (x, y) = xor_free_data();
        let m = Model::fit(&LearnerSpec::default_logistic(0), x.view(), &y, None).unwrap();
        let probe = Array2::<f64>::zeros((2, 3));
        assert!(m.predict_proba(probe.view()).is_err());
    }

    #[test]
    fn json_round_trip() {
        let (x, y) = xor_free_data();
        for spec in LearnerSpec::default_pair(7) {
            let m = Model::fit(&spec, x.view(), &y, None).unwrap();
            let text = m.to_json().unwrap();
            let m2 = Model::from_json(&text).unwrap();
            let p1 = m.predict_proba(x.view()).unwrap();
            let p2 = m2.predict_proba(x.view()).unwrap();
            assert_eq!(p1, p2);
        }
    }

    #[test]
    fn spec_json_uses_kind_tag() {
        let spec = LearnerSpec::default_gbdt(3);
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"kind\":\"gradient_boosted_trees\""), "{text}");
        let back: LearnerSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn grid_range_validation() {
        let bad = LearnerSpec::GradientBoostedTrees {
            n_estimators: 5,
            num_leaves: 31,
            min_child_samples: 20,
            max_depth: 6,
            learning_rate: 0.1,
            seed: 0,
        };
        assert!(bad.validate().is_ok());
        assert!(bad.validate_grid_ranges().is_err());
        assert!(LearnerSpec::default_gbdt(0).validate_grid_ranges().is_ok());
    }
}
