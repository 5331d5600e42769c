//! Fairness-aware data valuation for binary classification.
//!
//! The crate scores every training instance with an entropy-based value
//! toward the prediction target and toward one or more protected
//! attributes, combines the two into a scalar utility, and uses that
//! utility to drive training-set sampling and reweighing interventions.
//! An evaluation layer measures the resulting performance/fairness
//! trade-off landscape (TPR at a fixed FPR ceiling versus group-rate
//! ratios) including Pareto frontiers and 80%-rule winners.
//!
//! Modules follow the pipeline order:
//!
//! * [`dataset`] — tabular data loading, validation, ordered splits.
//! * [`synthgen`] — synthetic datasets with controllable bias conditions.
//! * [`learners`] — weighted logistic regression and gradient boosted
//!   trees behind one fit/predict-probability contract.
//! * [`valuation`] — out-of-bag and in-bag entropy valuations.
//! * [`utility`] — linear, multiplicative, and subtractive utilities.
//! * [`preprocess`] — UASP/UAR interventions and RPS/RW baselines.
//! * [`evaluation`] — thresholding, fairness ratios, Pareto analysis,
//!   and the benchmark harness.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod learners;
pub mod preprocess;
pub mod synthgen;
pub mod utility;
pub mod valuation;

pub use error::{Error, Result};
