//! Benchmark-level behavior: point counts, determinism, and the
//! no-intervention equivalence oracle.

mod common;

use fado_core::evaluation::{
    evaluate_grid, run_benchmark, BenchmarkConfig, InterventionSpec, ThresholdMode,
};
use fado_core::learners::LearnerSpec;
use fado_core::synthgen::{generate, BiasSpec};
use fado_core::utility::UtilityConfig;
use fado_core::valuation::ValuationConfig;

fn bench_data(seed: u64) -> (fado_core::dataset::Dataset, fado_core::dataset::Dataset) {
    let data = generate(&BiasSpec {
        n_rows: 900,
        group_prevalences: vec![0.15, 0.3],
        conditional_shift: vec![[0.0, 0.0], [0.0, 0.8]],
        class_separation: 0.8,
        seed,
        ..BiasSpec::default()
    })
    .unwrap();
    let split = data.split_ordered(2.0 / 3.0).unwrap();
    (split.train, split.test)
}

fn logistic_grid(n: usize) -> Vec<LearnerSpec> {
    (0..n)
        .map(|k| LearnerSpec::LogisticRegression {
            learning_rate: 0.2 + 0.05 * k as f64,
            epochs: 120,
            l2: 1e-4,
            seed: k as u64,
        })
        .collect()
}

fn quick_valuation(seed: u64) -> ValuationConfig {
    ValuationConfig {
        n_bags: 4,
        pct_unseen: 0.3,
        models: vec![LearnerSpec::default_logistic(seed)],
        seed,
        ..ValuationConfig::default()
    }
}

fn config(interventions: Vec<InterventionSpec>, grid: Vec<LearnerSpec>) -> BenchmarkConfig {
    BenchmarkConfig {
        protected_column: "z".into(),
        interventions,
        grid,
        valuation: quick_valuation(5),
        fpr_target: 0.1,
        threshold_mode: ThresholdMode::Test,
        seed: 17,
    }
}

#[test]
fn singleton_benchmark_yields_one_frontier_point() {
    let (train, test) = bench_data(1);
    let cfg = config(vec![InterventionSpec::None], logistic_grid(1));
    let report = run_benchmark(&train, &test, &cfg).unwrap();
    assert_eq!(report.points.len(), 1);
    for metric in fado_core::evaluation::FairnessMetric::all() {
        assert_eq!(report.pareto[&metric], vec![0]);
    }
}

#[test]
fn point_count_is_interventions_times_grid() {
    let (train, test) = bench_data(2);
    // none + an 11-point uasp sweep, grid of 3
    let mut interventions = vec![InterventionSpec::None];
    for k in 0..=10 {
        interventions.push(InterventionSpec::Uasp {
            utility: UtilityConfig::linear(f64::from(k) / 10.0),
        });
    }
    let cfg = config(interventions, logistic_grid(3));
    let report = run_benchmark(&train, &test, &cfg).unwrap();
    assert_eq!(report.points.len(), 3 * (1 + 11));
}

#[test]
fn rerun_with_same_seed_is_byte_identical() {
    let (train, test) = bench_data(3);
    let cfg = config(
        vec![
            InterventionSpec::None,
            InterventionSpec::Rps,
            InterventionSpec::Rw,
            InterventionSpec::Uar {
                utility: UtilityConfig::linear(0.5),
            },
        ],
        logistic_grid(2),
    );
    let a = run_benchmark(&train, &test, &cfg).unwrap().to_json().unwrap();
    let b = run_benchmark(&train, &test, &cfg).unwrap().to_json().unwrap();
    assert_eq!(a, b);
}

#[test]
fn no_intervention_equals_a_raw_fit() {
    let (train, test) = bench_data(4);
    let grid = logistic_grid(2);
    let cfg = config(vec![InterventionSpec::None], grid.clone());
    let report = run_benchmark(&train, &test, &cfg).unwrap();

    // oracle: fitting the raw training set (all-ones weights) directly
    let direct = evaluate_grid(&train, None, &test, "z", &grid, 0.1, "none").unwrap();
    assert_eq!(report.points.len(), direct.len());
    for (a, b) in report.points.iter().zip(&direct) {
        assert_eq!(a.performance, b.performance);
        assert_eq!(a.threshold, b.threshold);
        assert_eq!(a.fairness, b.fairness);
    }
}

#[test]
fn validation_threshold_mode_carves_the_training_tail() {
    let (train, test) = bench_data(6);
    let mut cfg = config(vec![InterventionSpec::None], logistic_grid(1));
    cfg.threshold_mode = ThresholdMode::Validation { fraction: 0.25 };
    let report = run_benchmark(&train, &test, &cfg).unwrap();
    assert_eq!(report.points.len(), 1);
    // threshold still yields a point with coordinates in range
    let p = &report.points[0];
    assert!((0.0..=1.0).contains(&p.performance));
    for v in p.fairness.values() {
        assert!((0.0..=1.0).contains(v));
    }
}

#[test]
fn grid_outside_table_ranges_is_rejected() {
    let (train, test) = bench_data(7);
    let bad_grid = vec![LearnerSpec::GradientBoostedTrees {
        n_estimators: 5, // below the grid minimum of 20
        num_leaves: 31,
        min_child_samples: 20,
        max_depth: 6,
        learning_rate: 0.1,
        seed: 0,
    }];
    let cfg = config(vec![InterventionSpec::None], bad_grid);
    let err = run_benchmark(&train, &test, &cfg).unwrap_err();
    assert!(err.to_string().contains("grid range"), "{err}");
}

#[test]
fn errors_carry_intervention_context() {
    let (train, test) = bench_data(8);
    // multiplicative utility rejects betas-free multi-column setups only;
    // force an error instead via an unknown protected column
    let mut cfg = config(vec![InterventionSpec::Rw], logistic_grid(1));
    cfg.protected_column = "nope".into();
    let err = run_benchmark(&train, &test, &cfg).unwrap_err();
    assert!(err.to_string().contains("nope"), "{err}");
}
