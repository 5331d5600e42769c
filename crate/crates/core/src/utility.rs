//! Scalar utilities combining performance and fairness valuations.
//!
//! Three elementwise combinations of `v_y` and `v_z` are supported:
//! linear `α·v_y + (1−α)·v_z`, multiplicative `v_y^α · v_z^(1−α)` (zero if
//! either side is zero when both exponents are active), and subtractive
//! `α·v_y − (1−α)·v_z`. With several protected columns the linear form
//! generalizes to `α·v_y + Σ β_j·v_z_j`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::valuation::ValuationVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilityKind {
    Linear,
    Multiplicative,
    Subtractive,
}

/// How utilities are rescaled when consumed as training weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingMode {
    MinMax,
    None,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UtilityConfig {
    pub kind: UtilityKind,
    /// Weight on the performance valuation, in [0,1].
    pub alpha: f64,
    /// Per-protected-column weights for the multi-attribute linear form.
    /// Required when more than one protected column is valued; implies
    /// `kind = linear`.
    #[serde(default)]
    pub betas: Option<BTreeMap<String, f64>>,
    /// Rescale betas so that `alpha + Σβ = 1`.
    #[serde(default)]
    pub normalize_betas: bool,
    /// Default scaling when the utility feeds reweighing.
    #[serde(default = "default_scaling")]
    pub scaling: ScalingMode,
}

fn default_scaling() -> ScalingMode {
    ScalingMode::MinMax
}

impl Default for UtilityConfig {
    fn default() -> Self {
        UtilityConfig {
            kind: UtilityKind::Linear,
            alpha: 0.5,
            betas: None,
            normalize_betas: false,
            scaling: ScalingMode::MinMax,
        }
    }
}

impl UtilityConfig {
    pub fn linear(alpha: f64) -> Self {
        UtilityConfig {
            alpha,
            ..UtilityConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Validation(format!(
                "alpha must be in [0,1], got {}",
                self.alpha
            )));
        }
        if let Some(betas) = &self.betas {
            if self.kind != UtilityKind::Linear {
                return Err(Error::Validation(
                    "betas are only defined for the linear utility".into(),
                ));
            }
            for (name, b) in betas {
                if !(b.is_finite() && *b >= 0.0) {
                    return Err(Error::Validation(format!(
                        "beta for `{name}` must be nonnegative, got {b}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Per-instance utilities with the config echoed for provenance.
#[derive(Debug, Clone)]
pub struct UtilityVector {
    pub ids: Vec<u64>,
    pub values: Vec<f64>,
    pub config: UtilityConfig,
}

/// Combine a valuation vector into per-instance utilities.
///
/// With a single protected column the configured kind applies directly;
/// with several, `betas` must name each column (linear only). Scaling is
/// not applied here: ordering consumers (sampling) use raw utilities and
/// reweighing applies its own scaling choice.
pub fn compute_utility(valuations: &ValuationVector, cfg: &UtilityConfig) -> Result<UtilityVector> {
    cfg.validate()?;
    let n = valuations.ids.len();
    if valuations.v_y.len() != n {
        return Err(Error::Validation("v_y is not aligned with ids".into()));
    }
    for (name, col) in &valuations.v_z {
        if col.len() != n {
            return Err(Error::Validation(format!(
                "v_z for `{name}` is not aligned with ids"
            )));
        }
    }
    if valuations.v_z.is_empty() {
        return Err(Error::Validation("no protected-column valuations present".into()));
    }

    let finite = |name: &str, values: &[f64]| -> Result<()> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "{name} has a non-finite value at position {i}"
            )));
        }
        Ok(())
    };
    finite("v_y", &valuations.v_y)?;
    for (name, col) in &valuations.v_z {
        finite(&format!("v_z `{name}`"), col)?;
    }

    let alpha = cfg.alpha;
    let values: Vec<f64> = if valuations.v_z.len() == 1 && cfg.betas.is_none() {
        let vz = valuations.v_z.values().next().unwrap();
        match cfg.kind {
            UtilityKind::Linear => valuations
                .v_y
                .iter()
                .zip(vz)
                .map(|(y, z)| alpha * y + (1.0 - alpha) * z)
                .collect(),
            UtilityKind::Subtractive => valuations
                .v_y
                .iter()
                .zip(vz)
                .map(|(y, z)| alpha * y - (1.0 - alpha) * z)
                .collect(),
            UtilityKind::Multiplicative => {
                if let Some(i) = valuations.v_y.iter().chain(vz).position(|v| *v < 0.0) {
                    return Err(Error::Validation(format!(
                        "multiplicative utility requires nonnegative valuations (position {i})"
                    )));
                }
                valuations
                    .v_y
                    .iter()
                    .zip(vz)
                    .map(|(y, z)| pow00(*y, alpha) * pow00(*z, 1.0 - alpha))
                    .collect()
            }
        }
    } else {
        // multi-attribute path
        let Some(betas) = &cfg.betas else {
            return Err(Error::Validation(format!(
                "{} protected columns require per-column betas",
                valuations.v_z.len()
            )));
        };
        if cfg.kind != UtilityKind::Linear {
            return Err(Error::Validation(
                "multi-attribute utilities are only defined for the linear kind".into(),
            ));
        }
        if betas.len() != valuations.v_z.len()
            || !betas.keys().eq(valuations.v_z.keys())
        {
            return Err(Error::Validation(format!(
                "betas name {} column(s) but valuations carry {}: betas must match the protected columns exactly",
                betas.len(),
                valuations.v_z.len()
            )));
        }
        let beta_sum: f64 = betas.values().sum();
        let scale = if cfg.normalize_betas && beta_sum > 0.0 {
            (1.0 - alpha) / beta_sum
        } else {
            1.0
        };
        let mut out: Vec<f64> = valuations.v_y.iter().map(|y| alpha * y).collect();
        for (name, beta) in betas {
            let col = &valuations.v_z[name];
            let b = beta * scale;
            for (o, z) in out.iter_mut().zip(col) {
                *o += b * z;
            }
        }
        out
    };

    Ok(UtilityVector {
        ids: valuations.ids.clone(),
        values,
        config: cfg.clone(),
    })
}

/// `x^a` with the `0^0 ≡ 1` convention.
fn pow00(x: f64, a: f64) -> f64 {
    if a == 0.0 {
        1.0
    } else {
        x.powf(a)
    }
}

/// Rescale to [0,1] via `(u − min)/(max − min)`, preserving order.
/// A constant vector maps to all ones so downstream reweighing degrades
/// to uniform weights.
pub fn min_max_scale(u: &[f64]) -> Result<Vec<f64>> {
    if u.is_empty() {
        return Err(Error::Validation("cannot scale an empty vector".into()));
    }
    if let Some(i) = u.iter().position(|v| !v.is_finite()) {
        return Err(Error::Validation(format!(
            "non-finite utility at position {i}"
        )));
    }
    let min = u.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return Ok(vec![1.0; u.len()]);
    }
    Ok(u.iter().map(|v| (v - min) / (max - min)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vv(v_y: Vec<f64>, v_z: Vec<f64>) -> ValuationVector {
        let ids = (0..v_y.len() as u64).collect();
        let mut map = BTreeMap::new();
        map.insert("z".to_string(), v_z);
        ValuationVector::from_parts(ids, v_y, map).unwrap()
    }

    #[test]
    fn hand_evaluated_values() {
        let v = vv(vec![0.8], vec![0.4]);
        let lin = compute_utility(&v, &UtilityConfig::linear(0.5)).unwrap();
        assert!((lin.values[0] - 0.6).abs() < 1e-15);

        let v = vv(vec![0.25], vec![0.04]);
        let cfg = UtilityConfig {
            kind: UtilityKind::Multiplicative,
            ..UtilityConfig::linear(0.5)
        };
        let mul = compute_utility(&v, &cfg).unwrap();
        assert!((mul.values[0] - 0.1).abs() < 1e-15, "{}", mul.values[0]);
    }

    #[test]
    fn multiplicative_zero_annihilates() {
        let v = vv(vec![0.9, 0.5], vec![0.0, 0.3]);
        let cfg = UtilityConfig {
            kind: UtilityKind::Multiplicative,
            ..UtilityConfig::linear(0.5)
        };
        let u = compute_utility(&v, &cfg).unwrap();
        assert_eq!(u.values[0], 0.0);
        assert!(u.values[1] > 0.0);
    }

    #[test]
    fn alpha_endpoints_are_exact() {
        let v = vv(vec![0.3, 0.7, 0.1], vec![0.9, 0.2, 0.5]);
        let lin1 = compute_utility(&v, &UtilityConfig::linear(1.0)).unwrap();
        assert_eq!(lin1.values, v.v_y);
        let lin0 = compute_utility(&v, &UtilityConfig::linear(0.0)).unwrap();
        assert_eq!(lin0.values, v.v_z["z"]);
        let mul1 = compute_utility(
            &v,
            &UtilityConfig {
                kind: UtilityKind::Multiplicative,
                ..UtilityConfig::linear(1.0)
            },
        )
        .unwrap();
        assert_eq!(mul1.values, v.v_y);
    }

    #[test]
    fn subtractive_can_go_negative() {
        let v = vv(vec![0.1], vec![0.9]);
        let cfg = UtilityConfig {
            kind: UtilityKind::Subtractive,
            ..UtilityConfig::linear(0.5)
        };
        let u = compute_utility(&v, &cfg).unwrap();
        assert!((u.values[0] + 0.4).abs() < 1e-15);
    }

    #[test]
    fn negative_input_to_multiplicative_rejected() {
        let v = vv(vec![-0.1], vec![0.5]);
        let cfg = UtilityConfig {
            kind: UtilityKind::Multiplicative,
            ..UtilityConfig::linear(0.5)
        };
        assert!(compute_utility(&v, &cfg).is_err());
    }

    #[test]
    fn multi_attribute_requires_matching_betas() {
        let ids = vec![0, 1];
        let mut map = BTreeMap::new();
        map.insert("z1".to_string(), vec![0.5, 0.5]);
        map.insert("z2".to_string(), vec![0.2, 0.8]);
        let v = ValuationVector::from_parts(ids, vec![0.4, 0.6], map).unwrap();

        // missing betas
        assert!(compute_utility(&v, &UtilityConfig::linear(0.5)).is_err());

        // wrong count
        let mut betas = BTreeMap::new();
        betas.insert("z1".to_string(), 0.3);
        let cfg = UtilityConfig {
            betas: Some(betas.clone()),
            ..UtilityConfig::linear(0.5)
        };
        assert!(compute_utility(&v, &cfg).is_err());

        // correct betas
        betas.insert("z2".to_string(), 0.2);
        let cfg = UtilityConfig {
            betas: Some(betas),
            ..UtilityConfig::linear(0.5)
        };
        let u = compute_utility(&v, &cfg).unwrap();
        // α·v_y + 0.3·v_z1 + 0.2·v_z2
        assert!((u.values[0] - (0.5 * 0.4 + 0.3 * 0.5 + 0.2 * 0.2)).abs() < 1e-15);
    }

    #[test]
    fn beta_normalization_sums_to_one_minus_alpha() {
        let ids = vec![0];
        let mut map = BTreeMap::new();
        map.insert("z1".to_string(), vec![1.0]);
        map.insert("z2".to_string(), vec![1.0]);
        let v = ValuationVector::from_parts(ids, vec![0.0], map).unwrap();
        let mut betas = BTreeMap::new();
        betas.insert("z1".to_string(), 3.0);
        betas.insert("z2".to_string(), 1.0);
        let cfg = UtilityConfig {
            alpha: 0.5,
            betas: Some(betas),
            normalize_betas: true,
            ..UtilityConfig::default()
        };
        let u = compute_utility(&v, &cfg).unwrap();
        // betas scale to 0.375 + 0.125 = 0.5 = 1 − α
        assert!((u.values[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn min_max_scale_examples() {
        assert_eq!(min_max_scale(&[0.0, 5.0, 10.0]).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(min_max_scale(&[3.0, 3.0, 3.0]).unwrap(), vec![1.0, 1.0, 1.0]);
        assert_eq!(min_max_scale(&[0.0, 0.25, 1.0]).unwrap(), vec![0.0, 0.25, 1.0]);
        assert!(min_max_scale(&[1.0, f64::NAN]).is_err());
        assert!(min_max_scale(&[]).is_err());
    }
}
