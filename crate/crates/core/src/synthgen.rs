//! Synthetic binary-classification data with controllable bias conditions.
//!
//! Rows carry a group from a single protected column `z`, a label drawn
//! from the group's prevalence, and class-conditional Gaussian features.
//! Setting per-group prevalences apart produces prevalence disparity;
//! a nonzero per-(group, class) mean shift on a feature subset produces
//! group-wise class-conditional distribution bias. With equal prevalences
//! and zero shift the protected attribute is independent of everything.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, ProtectedColumn};
use crate::error::{Error, Result};

/// Parameters of the generator. Group `g` occupies `group_fractions[g]`
/// of the rows and has positive rate `group_prevalences[g]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BiasSpec {
    pub n_rows: usize,
    pub n_features: usize,
    /// Per-group row probabilities; must sum to 1.
    pub group_fractions: Vec<f64>,
    /// Per-group positive rates, each in (0,1).
    pub group_prevalences: Vec<f64>,
    /// Extra feature mean shift indexed `[group][class]`, applied only to
    /// `shifted_features`. All zeros disables conditional bias.
    pub conditional_shift: Vec<[f64; 2]>,
    /// Indices of the features receiving the conditional shift.
    pub shifted_features: Vec<usize>,
    /// Mean separation between classes; this is what makes the target
    /// learnable at all.
    pub class_separation: f64,
    /// Features carrying the class separation (default: all of them).
    /// Restricting this set leaves the rest free to act as pure group
    /// proxies.
    #[serde(default)]
    pub class_signal_features: Option<Vec<usize>>,
    /// Keep the encoded protected column inside the feature matrix.
    #[serde(default = "default_include")]
    pub include_protected_in_features: bool,
    pub seed: u64,
}

fn default_include() -> bool {
    true
}

impl Default for BiasSpec {
    fn default() -> Self {
        BiasSpec {
            n_rows: 20_000,
            n_features: 10,
            group_fractions: vec![0.5, 0.5],
            group_prevalences: vec![0.01, 0.01],
            conditional_shift: vec![[0.0, 0.0], [0.0, 0.0]],
            shifted_features: vec![0, 1],
            class_separation: 0.3,
            class_signal_features: None,
            include_protected_in_features: true,
            seed: 0,
        }
    }
}

impl BiasSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_rows < 2 {
            return Err(Error::Validation("n_rows must be at least 2".into()));
        }
        if self.n_features < 2 {
            return Err(Error::Validation("n_features must be at least 2".into()));
        }
        let k = self.group_fractions.len();
        if k < 2 {
            return Err(Error::Validation("need at least 2 groups".into()));
        }
        if self.group_prevalences.len() != k || self.conditional_shift.len() != k {
            return Err(Error::Validation(
                "group_fractions, group_prevalences, and conditional_shift must have one entry per group".into(),
            ));
        }
        let sum: f64 = self.group_fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "group_fractions must sum to 1, got {sum}"
            )));
        }
        for (g, frac) in self.group_fractions.iter().enumerate() {
            if frac * (self.n_rows as f64) < 1.0 {
                return Err(Error::Validation(format!(
                    "group {g} has an expected row count below 1 (fraction {frac}, n={})",
                    self.n_rows
                )));
            }
        }
        for (g, p) in self.group_prevalences.iter().enumerate() {
            if !(*p > 0.0 && *p < 1.0) {
                return Err(Error::Validation(format!(
                    "group {g} prevalence must be in (0,1), got {p}"
                )));
            }
        }
        for (g, s) in self.conditional_shift.iter().enumerate() {
            if !s[0].is_finite() || !s[1].is_finite() {
                return Err(Error::Validation(format!(
                    "conditional_shift for group {g} is not finite"
                )));
            }
        }
        for &f in &self.shifted_features {
            if f >= self.n_features {
                return Err(Error::Validation(format!(
                    "shifted feature index {f} out of range (n_features={})",
                    self.n_features
                )));
            }
        }
        if !self.class_separation.is_finite() {
            return Err(Error::Validation("class_separation must be finite".into()));
        }
        if let Some(features) = &self.class_signal_features {
            if features.is_empty() {
                return Err(Error::Validation(
                    "class_signal_features must name at least one feature".into(),
                ));
            }
            for &f in features {
                if f >= self.n_features {
                    return Err(Error::Validation(format!(
                        "class signal feature index {f} out of range (n_features={})",
                        self.n_features
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Independent per-row stream: rows can be generated in any order (or in
/// parallel) without changing the output.
fn row_rng(seed: u64, row: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ row.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Generate a dataset from `spec`. Deterministic given `spec.seed`.
///
/// Feature columns are named `f0..f{d-1}`, the protected column `z`, the
/// target `y`; ids are `0..n-1`.
pub fn generate(spec: &BiasSpec) -> Result<Dataset> {
    spec.validate()?;
    let n = spec.n_rows;
    let d = spec.n_features;
    let k = spec.group_fractions.len();

    let mut cumulative = Vec::with_capacity(k);
    let mut acc = 0.0;
    for f in &spec.group_fractions {
        acc += f;
        cumulative.push(acc);
    }

    let extra = usize::from(spec.include_protected_in_features);
    let mut features = Array2::<f64>::zeros((n, d + extra));
    let mut target = vec![0u8; n];
    let mut groups = vec![0u32; n];

    for i in 0..n {
        let mut rng = row_rng(spec.seed, i as u64);
        let u: f64 = rng.random();
        let g = cumulative.iter().position(|c| u < *c).unwrap_or(k - 1);
        let y = u8::from(rng.random::<f64>() < spec.group_prevalences[g]);
        groups[i] = g as u32;
        target[i] = y;
        let shift = spec.conditional_shift[g][y as usize];
        for j in 0..d {
            let noise: f64 = rng.sample(StandardNormal);
            let mut v = noise;
            let carries_class_signal = spec
                .class_signal_features
                .as_ref()
                .map_or(true, |set| set.contains(&j));
            if carries_class_signal {
                v += f64::from(y) * spec.class_separation;
            }
            if shift != 0.0 && spec.shifted_features.contains(&j) {
                v += shift;
            }
            features[(i, j)] = v;
        }
        if spec.include_protected_in_features {
            features[(i, d)] = g as f64;
        }
    }

    let mut feature_names: Vec<String> = (0..d).map(|j| format!("f{j}")).collect();
    if spec.include_protected_in_features {
        feature_names.push("z".to_string());
    }
    let labels: Vec<String> = (0..k).map(|g| g.to_string()).collect();

    Dataset::new(
        (0..n as u64).collect(),
        features,
        feature_names,
        target,
        vec![ProtectedColumn {
            name: "z".to_string(),
            groups,
            labels,
        }],
        spec.include_protected_in_features,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_given_seed() {
        let spec = BiasSpec {
            n_rows: 500,
            ..BiasSpec::default()
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seed_changes_output() {
        let spec = BiasSpec {
            n_rows: 500,
            ..BiasSpec::default()
        };
        let other = BiasSpec { seed: 1, ..spec.clone() };
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn degenerate_group_rejected() {
        let spec = BiasSpec {
            n_rows: 100,
            group_fractions: vec![0.999, 0.001],
            ..BiasSpec::default()
        };
        let err = generate(&spec).unwrap_err();
        assert!(err.to_string().contains("expected row count"));
    }

    #[test]
    fn fractions_must_sum_to_one() {
        let spec = BiasSpec {
            group_fractions: vec![0.6, 0.6],
            ..BiasSpec::default()
        };
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn overall_positive_rate_near_one_percent() {
        let spec = BiasSpec {
            n_rows: 50_000,
            group_prevalences: vec![0.01, 0.01],
            ..BiasSpec::default()
        };
        let data = generate(&spec).unwrap();
        let rate = data.target().iter().map(|y| *y as f64).sum::<f64>() / data.n_rows() as f64;
        // 3 binomial standard deviations around 0.01
        let sd = (0.01f64 * 0.99 / 50_000.0).sqrt();
        assert!((rate - 0.01).abs() < 3.0 * sd, "rate={rate}");
    }

    #[test]
    fn per_group_prevalence_within_binomial_bounds() {
        let spec = BiasSpec {
            n_rows: 50_000,
            group_prevalences: vec![0.01, 0.05],
            ..BiasSpec::default()
        };
        let data = generate(&spec).unwrap();
        let col = &data.protected()[0];
        for (g, want) in [(0u32, 0.01f64), (1u32, 0.05f64)] {
            let rows: Vec<usize> = (0..data.n_rows()).filter(|&i| col.groups[i] == g).collect();
            let pos = rows.iter().filter(|&&i| data.target()[i] == 1).count();
            let n_g = rows.len() as f64;
            let got = pos as f64 / n_g;
            let sd = (want * (1.0 - want) / n_g).sqrt();
            assert!(
                (got - want).abs() <= 3.0 * sd,
                "group {g}: got {got}, want {want} ± {}",
                3.0 * sd
            );
        }
    }

    #[test]
    fn protected_column_appended_to_features() {
        let data = generate(&BiasSpec {
            n_rows: 50,
            group_prevalences: vec![0.4, 0.4],
            ..BiasSpec::default()
        })
        .unwrap();
        assert_eq!(data.n_features(), 11);
        assert_eq!(data.feature_names().last().unwrap(), "z");
        let col = &data.protected()[0];
        for i in 0..data.n_rows() {
            assert_eq!(data.features()[(i, 10)], f64::from(col.groups[i]));
        }
    }
}
