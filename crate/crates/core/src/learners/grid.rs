//! Log-uniform hyperparameter grid sampling for benchmark model sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LearnerKind, LearnerSpec};
use crate::error::{Error, Result};

/// Sampling ranges for boosted-tree grids.
///
/// The default caps `n_estimators` at 500 to keep desk-scale benchmarks
/// in the minutes range; [`GbdtGridRanges::full`] restores the full
/// 10000-tree ceiling.
#[derive(Debug, Clone)]
pub struct GbdtGridRanges {
    pub n_estimators: (usize, usize),
    pub num_leaves: (usize, usize),
    pub min_child_samples: (usize, usize),
    pub max_depth: (usize, usize),
    pub learning_rate: (f64, f64),
}

impl Default for GbdtGridRanges {
    fn default() -> Self {
        GbdtGridRanges {
            n_estimators: (20, 500),
            num_leaves: (10, 1000),
            min_child_samples: (5, 300),
            max_depth: (2, 20),
            learning_rate: (0.02, 0.5),
        }
    }
}

impl GbdtGridRanges {
    /// The unreduced ranges: n_estimators up to 10000.
    pub fn full() -> Self {
        GbdtGridRanges {
            n_estimators: (20, 10_000),
            ..Default::default()
        }
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.random();
    (lo.ln() + u * (hi.ln() - lo.ln())).exp()
}

fn log_uniform_int(rng: &mut ChaCha8Rng, range: (usize, usize)) -> usize {
    let v = log_uniform(rng, range.0 as f64, range.1 as f64).round() as usize;
    v.clamp(range.0, range.1)
}

/// Sample `n_models` hyperparameter configurations log-uniformly.
/// Deterministic given `seed`; boosted-tree draws use the default
/// desk-scale ranges.
pub fn sample_grid(kind: LearnerKind, n_models: usize, seed: u64) -> Result<Vec<LearnerSpec>> {
    sample_grid_with(kind, &GbdtGridRanges::default(), n_models, seed)
}

/// [`sample_grid`] with explicit boosted-tree ranges (ignored for the
/// logistic kind).
pub fn sample_grid_with(
    kind: LearnerKind,
    ranges: &GbdtGridRanges,
    n_models: usize,
    seed: u64,
) -> Result<Vec<LearnerSpec>> {
    if n_models == 0 {
        return Err(Error::Validation("n_models must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut specs = Vec::with_capacity(n_models);
    for _ in 0..n_models {
        let spec = match kind {
            LearnerKind::GradientBoostedTrees => LearnerSpec::GradientBoostedTrees {
                n_estimators: log_uniform_int(&mut rng, ranges.n_estimators),
                num_leaves: log_uniform_int(&mut rng, ranges.num_leaves),
                min_child_samples: log_uniform_int(&mut rng, ranges.min_child_samples),
                max_depth: log_uniform_int(&mut rng, ranges.max_depth),
                learning_rate: log_uniform(&mut rng, ranges.learning_rate.0, ranges.learning_rate.1),
                seed: rng.random(),
            },
            LearnerKind::LogisticRegression => LearnerSpec::LogisticRegression {
                learning_rate: log_uniform(&mut rng, 0.05, 0.5),
                epochs: log_uniform_int(&mut rng, (50, 400)),
                l2: log_uniform(&mut rng, 1e-6, 1e-2),
                seed: rng.random(),
            },
        };
        specs.push(spec);
    }
    Ok(specs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_25_models_are_distinct_and_in_range() {
        let grid = sample_grid(LearnerKind::GradientBoostedTrees, 25, 42).unwrap();
        assert_eq!(grid.len(), 25);
        for spec in &grid {
            spec.validate_grid_ranges().unwrap();
            // desk-scale cap
            if let LearnerSpec::GradientBoostedTrees { n_estimators, .. } = spec {
                assert!(*n_estimators <= 500);
            }
        }
        for i in 0..grid.len() {
            for j in (i + 1)..grid.len() {
                assert_ne!(grid[i], grid[j], "specs {i} and {j} collide");
            }
        }
    }

    #[test]
    fn single_model_in_range() {
        let grid = sample_grid(LearnerKind::GradientBoostedTrees, 1, 7).unwrap();
        assert_eq!(grid.len(), 1);
        grid[0].validate_grid_ranges().unwrap();
    }

    #[test]
    fn same_seed_same_grid() {
        let a = sample_grid(LearnerKind::GradientBoostedTrees, 10, 3).unwrap();
        let b = sample_grid(LearnerKind::GradientBoostedTrees, 10, 3).unwrap();
        assert_eq!(a, b);
        let c = sample_grid(LearnerKind::GradientBoostedTrees, 10, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_models_rejected() {
        assert!(sample_grid(LearnerKind::LogisticRegression, 0, 1).is_err());
    }

    #[test]
    fn full_ranges_allow_large_forests() {
        let grid =
            sample_grid_with(LearnerKind::GradientBoostedTrees, &GbdtGridRanges::full(), 50, 9)
                .unwrap();
        for spec in &grid {
            spec.validate_grid_ranges().unwrap();
        }
    }
}
