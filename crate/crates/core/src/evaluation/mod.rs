//! Model scoring under the fixed-FPR protocol, fairness ratios, Pareto
//! analysis, and the benchmark harness tying them together.

mod benchmark;
mod metrics;
mod pareto;
mod plot;

pub use benchmark::{
    default_alpha_grid, evaluate_grid, run_benchmark, BenchmarkConfig, EvalPoint, EvalReport, InterventionSpec,
    ThresholdMode, REPORT_SCHEMA_VERSION,
};
pub use metrics::{
    classify, fairness_ratio, threshold_at_fpr, tpr_at_threshold, FairnessMetric,
};
pub use pareto::{pareto_frontier, rule80_winner, RULE80_THRESHOLD};
pub use plot::scatter_svg;
