// scratch probe for the directional benchmark; not part of the deliverable
use fado_core::evaluation::{
    default_alpha_grid, run_benchmark, BenchmarkConfig, FairnessMetric, ThresholdMode,
};
use fado_core::learners::{sample_grid, LearnerKind};
use fado_core::synthgen::{generate, BiasSpec};
use fado_core::valuation::ValuationConfig;
use std::time::Instant;

fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j < idx.len() && v[idx[j]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j - 1) as f64 / 2.0 + 1.0;
            for k in i..j {
                r[idx[k]] = avg;
            }
            i = j;
        }
        r
    }
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
    cov / (vx.sqrt() * vy.sqrt())
}

fn main() {
    let spec = BiasSpec {
        n_rows: 20_000,
        group_prevalences: vec![0.003, 0.017],
        conditional_shift: vec![[0.0, 0.0], [0.8, 0.8]],
        shifted_features: vec![0, 1],
        class_separation: 0.5,
        class_signal_features: Some(vec![2, 3, 4, 5, 6, 7, 8, 9]),
        include_protected_in_features: false,
        seed: 7,
        ..BiasSpec::default()
    };
    let data = generate(&spec).unwrap();
    let split = data.split_ordered(0.75).unwrap();
    println!("warnings: {:?}", split.warnings);

    let grid = sample_grid(LearnerKind::GradientBoostedTrees, 25, 1).unwrap();
    let cfg = BenchmarkConfig {
        protected_column: "z".into(),
        interventions: BenchmarkConfig::standard_interventions(&default_alpha_grid()),
        grid,
        valuation: ValuationConfig::default(),
        fpr_target: 0.05,
        threshold_mode: ThresholdMode::Test,
        seed: 11,
    };
    let t0 = Instant::now();
    let report = run_benchmark(&split.train, &split.test, &cfg).unwrap();
    println!("benchmark took {:?}, {} points", t0.elapsed(), report.points.len());
    for w in &report.warnings {
        println!("warn: {w}");
    }

    let dp = FairnessMetric::DemographicParity;
    let median = |mut v: Vec<f64>| -> f64 {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    let none_dp = median(
        report
            .points
            .iter()
            .filter(|p| p.intervention == "none")
            .map(|p| p.fairness[&dp])
            .collect(),
    );
    let uar05_dp = median(
        report
            .points
            .iter()
            .filter(|p| p.intervention.starts_with("uar") && p.alpha == Some(0.5))
            .map(|p| p.fairness[&dp])
            .collect(),
    );
    let none_tpr = median(
        report
            .points
            .iter()
            .filter(|p| p.intervention == "none")
            .map(|p| p.performance)
            .collect(),
    );
    println!("median none: dp={none_dp:.3} tpr={none_tpr:.3}");
    for arm in ["rps", "rw"] {
        let dpm = median(report.points.iter().filter(|p| p.intervention == arm).map(|p| p.fairness[&dp]).collect());
        let tm = median(report.points.iter().filter(|p| p.intervention == arm).map(|p| p.performance).collect());
        println!("median {arm}: dp={dpm:.3} tpr={tm:.3}");
    }
    println!("median uar(0.5): dp={uar05_dp:.3} (need >= none+0.05)");

    for subset in ["all", "uasp", "uar"] {
        let ua: Vec<&fado_core::evaluation::EvalPoint> = report
            .points
            .iter()
            .filter(|p| p.alpha.is_some() && (subset == "all" || p.intervention.starts_with(subset)))
            .collect();
        let alphas: Vec<f64> = ua.iter().map(|p| p.alpha.unwrap()).collect();
        let tprs: Vec<f64> = ua.iter().map(|p| p.performance).collect();
        println!("[{subset}] spearman(alpha, tpr) = {:.3} (need >= 0.3)", spearman(&alphas, &tprs));
        for metric in FairnessMetric::all() {
            let f: Vec<f64> = ua.iter().map(|p| p.fairness[&metric]).collect();
            println!("[{subset}] spearman(alpha, {metric}) = {:.3} (need <= -0.3)", spearman(&alphas, &f));
        }
    }

    for metric in FairnessMetric::all() {
        let frontier = &report.pareto[&metric];
        let ua_on = frontier
            .iter()
            .filter(|&&i| report.points[i].alpha.is_some())
            .count();
        println!("{metric}: frontier size {} with {ua_on} utility-aware", frontier.len());
    }

    // per-alpha medians for a feel of the sweep
    for method in ["uasp", "uar"] {
        print!("{method} dp medians by alpha: ");
        for k in 0..=10 {
            let a = k as f64 / 10.0;
            let vals: Vec<f64> = report
                .points
                .iter()
                .filter(|p| p.intervention.starts_with(method) && p.alpha == Some(a))
                .map(|p| p.fairness[&dp])
                .collect();
            print!("{:.2} ", median(vals));
        }
        println!();
        print!("{method} tpr medians by alpha: ");
        for k in 0..=10 {
            let a = k as f64 / 10.0;
            let vals: Vec<f64> = report
                .points
                .iter()
                .filter(|p| p.intervention.starts_with(method) && p.alpha == Some(a))
                .map(|p| p.performance)
                .collect();
            print!("{:.2} ", median(vals));
        }
        println!();
    }
}
