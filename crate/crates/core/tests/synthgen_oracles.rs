//! Generator oracles: permutation-tested independence on unbiased data
//! and detectability of the conditional-bias signal.

mod common;

use fado_core::learners::{LearnerSpec, Model};
use fado_core::synthgen::{generate, BiasSpec};
use fado_core::valuation::{design_matrix, VarRole};

use common::{permuted_labels, roc_auc};

fn unbiased_spec(n: usize) -> BiasSpec {
    BiasSpec {
        n_rows: n,
        group_prevalences: vec![0.3, 0.3],
        conditional_shift: vec![[0.0, 0.0], [0.0, 0.0]],
        class_separation: 0.5,
        seed: 12,
        ..BiasSpec::default()
    }
}

fn shifted_spec(n: usize, shift: f64) -> BiasSpec {
    BiasSpec {
        conditional_shift: vec![[0.0, 0.0], [shift, shift]],
        ..unbiased_spec(n)
    }
}

/// Train a group classifier on (X, Y) over the first half of the rows
/// and return its AUC on the second half.
fn z_classifier_auc(spec: &BiasSpec, label_seed: Option<u64>) -> f64 {
    let data = generate(spec).unwrap();
    let (x, mut z) = design_matrix(&data, &VarRole::Protected("z".into())).unwrap();
    if let Some(seed) = label_seed {
        z = permuted_labels(&z, seed);
    }
    let n = data.n_rows();
    let half = n / 2;
    let train_idx: Vec<usize> = (0..half).collect();
    let test_idx: Vec<usize> = (half..n).collect();
    let x_train = x.select(ndarray::Axis(0), &train_idx);
    let x_test = x.select(ndarray::Axis(0), &test_idx);
    let z_train: Vec<u8> = train_idx.iter().map(|&i| z[i]).collect();
    let z_test: Vec<u8> = test_idx.iter().map(|&i| z[i]).collect();
    let model = Model::fit(&LearnerSpec::default_logistic(3), x_train.view(), &z_train, None)
        .unwrap();
    let scores = model.predict_proba(x_test.view()).unwrap();
    roc_auc(&scores, &z_test)
}

#[test]
fn unbiased_data_is_at_chance_under_the_permutation_null() {
    let spec = unbiased_spec(4_000);
    let observed = z_classifier_auc(&spec, None);

    let null: Vec<f64> = (0..100).map(|s| z_classifier_auc(&spec, Some(s))).collect();
    let mut sorted = null.clone();
    sorted.sort_by(f64::total_cmp);
    // alpha = 0.01 two-sided band from the permutation null
    let lo = sorted[0];
    let hi = sorted[sorted.len() - 1];
    assert!(
        observed >= lo && observed <= hi,
        "AUC {observed} outside permutation band [{lo}, {hi}]"
    );
}

#[test]
fn conditional_shift_is_detectable_beyond_five_sigma() {
    let spec = shifted_spec(4_000, 1.0);
    let observed = z_classifier_auc(&spec, None);

    let null: Vec<f64> = (0..60).map(|s| z_classifier_auc(&spec, Some(s))).collect();
    let mean = common::mean(&null);
    let sd = (null.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / null.len() as f64)
        .sqrt();
    assert!(
        observed > 0.5 + 5.0 * sd,
        "AUC {observed} not above 0.5 + 5σ (σ={sd})"
    );
}

#[test]
fn z_classifier_auc_is_monotone_in_the_shift() {
    let mut last = 0.0;
    for (k, shift) in [0.0, 0.75, 2.0].into_iter().enumerate() {
        let auc = z_classifier_auc(&shifted_spec(4_000, shift), None);
        if k > 0 {
            assert!(
                auc >= last - 0.01,
                "AUC fell from {last} to {auc} at shift {shift}"
            );
        }
        last = auc;
    }
}
