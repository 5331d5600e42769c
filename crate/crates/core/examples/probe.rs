// scratch probe for acceptance tuning; not part of the deliverable
use fado_core::synthgen::{generate, BiasSpec};
use fado_core::valuation::{out_of_bag_valuation, ValuationConfig, VarRole};
use std::time::Instant;

fn main() {
    let spec = BiasSpec {
        n_rows: 20_000,
        group_prevalences: vec![0.3, 0.3],
        class_separation: 0.3,
        ..BiasSpec::default()
    };
    let data = generate(&spec).unwrap();
    let cfg = ValuationConfig::default();

    let t0 = Instant::now();
    let vz = out_of_bag_valuation(&data, &VarRole::Protected("z".into()), &cfg).unwrap();
    let dt = t0.elapsed();
    let mean: f64 = vz.values.iter().sum::<f64>() / vz.values.len() as f64;
    let min = vz.values.iter().cloned().fold(f64::MAX, f64::min);
    println!("v_z: mean={mean:.4} min={min:.4} time={dt:?} warnings={:?}", vz.warnings);

    let t0 = Instant::now();
    let vy = out_of_bag_valuation(&data, &VarRole::Target, &cfg).unwrap();
    let dt = t0.elapsed();
    let mean: f64 = vy.values.iter().sum::<f64>() / vy.values.len() as f64;
    println!("v_y: mean={mean:.4} time={dt:?}");
}
