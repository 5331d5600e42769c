//! Property tests for the spec-level invariants that hold over whole
//! input families rather than single examples.

mod common;

use std::collections::BTreeMap;

use fado_core::dataset::{Dataset, ProtectedColumn};
use fado_core::utility::{compute_utility, min_max_scale, UtilityConfig, UtilityKind};
use fado_core::valuation::{prediction_entropy, ValuationVector};
use ndarray::Array2;
use proptest::prelude::*;

fn unit_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..=1.0, len)
}

fn argsort(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]).then(a.cmp(&b)));
    idx
}

fn vv(v_y: Vec<f64>, v_z: Vec<f64>) -> ValuationVector {
    let ids = (0..v_y.len() as u64).collect();
    let mut map = BTreeMap::new();
    map.insert("z".to_string(), v_z);
    ValuationVector::from_parts(ids, v_y, map).unwrap()
}

proptest! {
    #[test]
    fn entropy_symmetry(p in 0.0f64..=1.0) {
        let a = prediction_entropy(p).unwrap();
        let b = prediction_entropy(1.0 - p).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn min_max_scaling_preserves_ranking(u in prop::collection::vec(-1e6f64..1e6, 1..64)) {
        let scaled = min_max_scale(&u).unwrap();
        prop_assert_eq!(argsort(&u), argsort(&scaled));
        prop_assert!(scaled.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn linear_utility_is_monotone_in_both_valuations(
        (vy, vz) in (1usize..32).prop_flat_map(|n| (unit_vec(n), unit_vec(n))),
        alpha in 0.01f64..=0.99,
        bump in 0.001f64..=0.2,
        pick in any::<prop::sample::Index>(),
    ) {
        let cfg = UtilityConfig::linear(alpha);
        let base = compute_utility(&vv(vy.clone(), vz.clone()), &cfg).unwrap();

        let i = pick.index(vy.len());
        let mut vy_up = vy.clone();
        vy_up[i] = (vy_up[i] + bump).min(1.0);
        let up_y = compute_utility(&vv(vy_up, vz.clone()), &cfg).unwrap();
        prop_assert!(up_y.values[i] >= base.values[i]);

        let mut vz_up = vz.clone();
        vz_up[i] = (vz_up[i] + bump).min(1.0);
        let up_z = compute_utility(&vv(vy, vz_up), &cfg).unwrap();
        prop_assert!(up_z.values[i] >= base.values[i]);
    }

    #[test]
    fn multiplicative_utility_is_bounded_by_the_larger_valuation(
        (vy, vz) in (1usize..32).prop_flat_map(|n| (unit_vec(n), unit_vec(n))),
        alpha in 0.0f64..=1.0,
    ) {
        let cfg = UtilityConfig { kind: UtilityKind::Multiplicative, ..UtilityConfig::linear(alpha) };
        let u = compute_utility(&vv(vy.clone(), vz.clone()), &cfg).unwrap();
        for ((y, z), got) in vy.iter().zip(&vz).zip(&u.values) {
            prop_assert!(*got <= y.max(*z) + 1e-12, "U={got} vy={y} vz={z}");
        }
    }

    #[test]
    fn ordered_split_partitions_rows_exactly(
        n in 2usize..120,
        fraction in 0.05f64..0.95,
    ) {
        let data = tiny_dataset(n);
        match data.split_ordered(fraction) {
            Ok(split) => {
                let mut combined: Vec<u64> = split.train.ids().to_vec();
                combined.extend_from_slice(split.test.ids());
                prop_assert_eq!(combined, data.ids().to_vec());
                prop_assert_eq!(
                    split.train.n_rows(),
                    (n as f64 * fraction).floor() as usize
                );
            }
            Err(_) => {
                // only legal when a side would be empty
                let k = (n as f64 * fraction).floor() as usize;
                prop_assert!(k == 0 || k == n);
            }
        }
    }

    #[test]
    fn group_prevalence_is_a_weighted_mean_decomposition(
        labels in prop::collection::vec(0u8..2, 4..100),
        group_bits in prop::collection::vec(any::<bool>(), 4..100),
    ) {
        let n = labels.len().min(group_bits.len());
        let labels = &labels[..n];
        let groups: Vec<u32> = group_bits[..n].iter().map(|b| u32::from(*b)).collect();
        prop_assume!(groups.contains(&0) && groups.contains(&1));
        let data = dataset_with(groups.clone(), labels.to_vec());
        let prev = data.group_prevalence("z").unwrap();
        let mut reconstructed = 0.0;
        for (g, p) in &prev {
            prop_assert!((0.0..=1.0).contains(p));
            let size = groups.iter().filter(|x| *x == g).count() as f64;
            reconstructed += p * size / n as f64;
        }
        let overall = labels.iter().map(|y| *y as f64).sum::<f64>() / n as f64;
        prop_assert!((reconstructed - overall).abs() < 1e-12);
    }
}

fn tiny_dataset(n: usize) -> Dataset {
    let groups: Vec<u32> = (0..n).map(|i| (i % 2) as u32).collect();
    let target: Vec<u8> = (0..n).map(|i| ((i / 2) % 2) as u8).collect();
    dataset_with(groups, target)
}

fn dataset_with(groups: Vec<u32>, target: Vec<u8>) -> Dataset {
    let n = groups.len();
    Dataset::new(
        (0..n as u64).collect(),
        Array2::from_shape_fn((n, 2), |(r, c)| (r * 2 + c) as f64),
        vec!["f0".into(), "f1".into()],
        target,
        vec![ProtectedColumn {
            name: "z".into(),
            groups,
            labels: vec!["a".into(), "b".into()],
        }],
        false,
    )
    .unwrap()
}
