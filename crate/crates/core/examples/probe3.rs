// scratch diagnostics for the intervention causal chain; not a deliverable
use fado_core::evaluation::{classify, threshold_at_fpr};
use fado_core::learners::{LearnerSpec, Model};
use fado_core::preprocess::{no_intervention, rps, uar};
use fado_core::synthgen::{generate, BiasSpec};
use fado_core::utility::{compute_utility, ScalingMode, UtilityConfig};
use fado_core::valuation::{ValuationConfig, ValuationVector};

fn main() {
    let spec = BiasSpec {
        n_rows: 20_000,
        group_prevalences: vec![0.004, 0.016],
        conditional_shift: vec![[0.0, 0.0], [1.25, 2.75]],
        shifted_features: vec![0, 1],
        class_separation: 0.45,
        class_signal_features: Some(vec![2, 3, 4, 5, 6, 7, 8, 9]),
        include_protected_in_features: false,
        seed: 7,
        ..BiasSpec::default()
    };
    let data = generate(&spec).unwrap();
    let split = data.split_ordered(0.75).unwrap();
    let (train, test) = (split.train, split.test);

    let vcfg = ValuationConfig::default();
    let vals = ValuationVector::compute(&train, &vcfg).unwrap();

    let groups = &train.protected()[0].groups;
    let stat = |pick: &dyn Fn(usize) -> bool, v: &[f64]| -> (f64, usize) {
        let sel: Vec<f64> = (0..train.n_rows()).filter(|&i| pick(i)).map(|i| v[i]).collect();
        (sel.iter().sum::<f64>() / sel.len().max(1) as f64, sel.len())
    };
    println!("=== valuation means by (group,label) ===");
    for g in 0..2u32 {
        for y in 0..2u8 {
            let pick = |i: usize| groups[i] == g && train.target()[i] == y;
            let (vy, n) = stat(&pick, &vals.v_y);
            let (vz, _) = stat(&pick, &vals.v_z["z"]);
            println!("group {g} label {y}: n={n:5} mean v_y={vy:.3} mean v_z={vz:.3}");
        }
    }

    for alpha in [0.0, 0.5] {
        let u = compute_utility(&vals, &UtilityConfig::linear(alpha)).unwrap();
        let r = uar(&train, &u, ScalingMode::MinMax).unwrap();
        println!("=== uar alpha={alpha} weight means ===");
        for g in 0..2u32 {
            for y in 0..2u8 {
                let pick = |i: usize| groups[i] == g && train.target()[i] == y;
                let (w, _) = stat(&pick, &r.weights);
                println!("group {g} label {y}: mean w={w:.3}");
            }
        }
        // weighted prevalence per group
        for g in 0..2u32 {
            let wp: f64 = (0..train.n_rows())
                .filter(|&i| groups[i] == g && train.target()[i] == 1)
                .map(|i| r.weights[i])
                .sum();
            let wt: f64 = (0..train.n_rows())
                .filter(|&i| groups[i] == g)
                .map(|i| r.weights[i])
                .sum();
            println!("group {g}: weighted prevalence {:.5}", wp / wt);
        }
    }

    // score one model per arm and dissect the confusion by group
    let spec_m = LearnerSpec::default_gbdt(1);
    let arms: Vec<(&str, fado_core::preprocess::InterventionResult)> = vec![
        ("none", no_intervention(&train)),
        (
            "uar(0.0)",
            uar(
                &train,
                &compute_utility(&vals, &UtilityConfig::linear(0.0)).unwrap(),
                ScalingMode::MinMax,
            )
            .unwrap(),
        ),
        (
            "uar(0.5)",
            uar(
                &train,
                &compute_utility(&vals, &UtilityConfig::linear(0.5)).unwrap(),
                ScalingMode::MinMax,
            )
            .unwrap(),
        ),
        ("rps", rps(&train, "z", 3).unwrap()),
    ];
    let test_groups = &test.protected()[0].groups;
    for (label, arm) in arms {
        let (d, w) = arm.apply(&train).unwrap();
        let m = Model::fit(&spec_m, d.features(), d.target(), Some(&w)).unwrap();
        let scores = m.predict_proba(test.features()).unwrap();
        let t = threshold_at_fpr(&scores, test.target(), 0.05).unwrap();
        let preds = classify(&scores, t);
        let mut stats = [[0usize; 4]; 2]; // [group][fp, tp, n_neg, n_pos]
        for i in 0..test.n_rows() {
            let g = test_groups[i] as usize;
            let y = test.target()[i];
            if y == 0 {
                stats[g][2] += 1;
                if preds[i] {
                    stats[g][0] += 1;
                }
            } else {
                stats[g][3] += 1;
                if preds[i] {
                    stats[g][1] += 1;
                }
            }
        }
        println!("=== {label}: threshold {t:.4} ===");
        for g in 0..2 {
            let [fp, tp, n_neg, n_pos] = stats[g];
            println!(
                "group {g}: FP {fp}/{n_neg} ({:.4}) TP {tp}/{n_pos} ({:.3}) PPR {:.4}",
                fp as f64 / n_neg as f64,
                tp as f64 / n_pos as f64,
                (fp + tp) as f64 / (n_neg + n_pos) as f64
            );
        }
    }
}
