//! Threshold selection at a fixed FPR ceiling and group fairness ratios.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fairness criteria measured as min/max ratios of group-wise rates, so
/// 1.0 is perfect parity and the 80% rule reads directly as ≥ 0.8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FairnessMetric {
    /// Ratio of group-wise false positive rates.
    PredictiveEquality,
    /// Ratio of group-wise false negative rates.
    EqualOpportunity,
    /// Ratio of group-wise predicted positive rates.
    DemographicParity,
}

impl FairnessMetric {
    pub fn all() -> [FairnessMetric; 3] {
        [
            FairnessMetric::PredictiveEquality,
            FairnessMetric::EqualOpportunity,
            FairnessMetric::DemographicParity,
        ]
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            FairnessMetric::PredictiveEquality => "predictive_equality",
            FairnessMetric::EqualOpportunity => "equal_opportunity",
            FairnessMetric::DemographicParity => "demographic_parity",
        }
    }
}

impl std::fmt::Display for FairnessMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Smallest decision threshold whose false positive rate does not exceed
/// `fpr_target`, with the prediction rule `score ≥ t`.
///
/// Candidate thresholds are the observed score values; when even the
/// largest score admits too many false positives the result is `+∞`
/// (predict nothing positive). The realized FPR at the returned threshold
/// is ≤ `fpr_target` by construction.
pub fn threshold_at_fpr(scores: &[f64], labels: &[u8], fpr_target: f64) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Validation("scores and labels must align".into()));
    }
    if !(fpr_target > 0.0 && fpr_target < 1.0) {
        return Err(Error::Validation(format!(
            "fpr_target must be in (0,1), got {fpr_target}"
        )));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::Validation(format!("non-finite score at row {i}")));
    }
    let mut negatives: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, y)| **y == 0)
        .map(|(s, _)| *s)
        .collect();
    if negatives.is_empty() {
        return Err(Error::Validation(
            "no negative labels; the FPR constraint is undefined".into(),
        ));
    }
    if !labels.contains(&1) {
        return Err(Error::Validation("no positive labels to score".into()));
    }
    negatives.sort_by(f64::total_cmp);
    let n_neg = negatives.len();
    let allowed_fp = (fpr_target * n_neg as f64).floor() as usize;
    // the (allowed_fp+1)-th largest negative: any valid threshold must
    // exceed it
    let cut = negatives[n_neg - 1 - allowed_fp];
    let mut best: Option<f64> = None;
    for &s in scores {
        if s > cut && best.map_or(true, |b| s < b) {
            best = Some(s);
        }
    }
    Ok(best.unwrap_or(f64::INFINITY))
}

/// Binary predictions under the `score ≥ t` rule.
pub fn classify(scores: &[f64], threshold: f64) -> Vec<bool> {
    scores.iter().map(|s| *s >= threshold).collect()
}

/// True positive rate of `score ≥ t` predictions.
pub fn tpr_at_threshold(scores: &[f64], labels: &[u8], threshold: f64) -> Result<f64> {
    let positives = labels.iter().filter(|y| **y == 1).count();
    if positives == 0 {
        return Err(Error::Validation("no positive labels".into()));
    }
    let hits = scores
        .iter()
        .zip(labels)
        .filter(|(s, y)| **y == 1 && **s >= threshold)
        .count();
    Ok(hits as f64 / positives as f64)
}

/// Min/max ratio of a group-wise rate across exactly two groups.
///
/// The rate is the group FPR, FNR, or predicted-positive rate depending
/// on the metric. Both rates zero is treated as perfect parity (1.0). A
/// group lacking the metric's denominator population is an error.
pub fn fairness_ratio(
    preds: &[bool],
    labels: &[u8],
    groups: &[u32],
    metric: FairnessMetric,
) -> Result<f64> {
    if preds.len() != labels.len() || labels.len() != groups.len() {
        return Err(Error::Validation(
            "predictions, labels, and groups must align".into(),
        ));
    }
    let mut present: Vec<u32> = groups.to_vec();
    present.sort_unstable();
    present.dedup();
    if present.len() != 2 {
        return Err(Error::Validation(format!(
            "fairness ratios need exactly 2 groups, found {}",
            present.len()
        )));
    }
    let mut rates = [0.0f64; 2];
    for (slot, &g) in present.iter().enumerate() {
        let members = || {
            groups
                .iter()
                .zip(labels)
                .zip(preds)
                .filter(move |((gi, _), _)| **gi == g)
        };
        let (num, den) = match metric {
            FairnessMetric::PredictiveEquality => {
                let negatives = members().filter(|((_, y), _)| **y == 0).count();
                let fp = members().filter(|((_, y), p)| **y == 0 && **p).count();
                (fp, negatives)
            }
            FairnessMetric::EqualOpportunity => {
                let positives = members().filter(|((_, y), _)| **y == 1).count();
                let fnr = members().filter(|((_, y), p)| **y == 1 && !**p).count();
                (fnr, positives)
            }
            FairnessMetric::DemographicParity => {
                let size = members().count();
                let predicted = members().filter(|(_, p)| **p).count();
                (predicted, size)
            }
        };
        if den == 0 {
            return Err(Error::Validation(format!(
                "group {g} has no rows with the population required for {metric}"
            )));
        }
        rates[slot] = num as f64 / den as f64;
    }
    let (lo, hi) = (rates[0].min(rates[1]), rates[0].max(rates[1]));
    if hi == 0.0 {
        return Ok(1.0);
    }
    Ok(lo / hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tight_fpr_target_forces_infinite_threshold() {
        let labels = [0, 0, 0, 0, 1];
        let scores = [0.1, 0.2, 0.3, 0.9, 0.8];
        let t = threshold_at_fpr(&scores, &labels, 0.05).unwrap();
        assert_eq!(t, f64::INFINITY);
        assert_eq!(tpr_at_threshold(&scores, &labels, t).unwrap(), 0.0);
    }

    #[test]
    fn looser_target_admits_false_positives() {
        let labels = [0, 0, 0, 0, 1];
        let scores = [0.1, 0.2, 0.3, 0.9, 0.8];
        let t = threshold_at_fpr(&scores, &labels, 0.5).unwrap();
        assert_eq!(t, 0.3);
        assert_eq!(tpr_at_threshold(&scores, &labels, t).unwrap(), 1.0);
        // realized FPR ≤ target
        let preds = classify(&scores, t);
        let fp = preds
            .iter()
            .zip(&labels)
            .filter(|(p, y)| **p && **y == 0)
            .count();
        assert!(fp as f64 / 4.0 <= 0.5);
    }

    #[test]
    fn perfect_separation_reaches_full_tpr() {
        let labels = [0, 0, 1, 1];
        let scores = [0.1, 0.2, 0.8, 0.9];
        for target in [0.05, 0.2, 0.6] {
            let t = threshold_at_fpr(&scores, &labels, target).unwrap();
            assert_eq!(tpr_at_threshold(&scores, &labels, t).unwrap(), 1.0);
        }
    }

    #[test]
    fn no_negatives_is_error() {
        let labels = [1, 1];
        let scores = [0.5, 0.6];
        assert!(threshold_at_fpr(&scores, &labels, 0.05).is_err());
    }

    #[test]
    fn fairness_ratio_hand_cases() {
        // group 0: rows 0..10 with 10 negatives, 1 FP → FPR 0.1
        // group 1: rows 10..20 with 10 negatives, 2 FP → FPR 0.2
        let labels = [0u8; 20];
        let groups: Vec<u32> = (0..20).map(|i| u32::from(i >= 10)).collect();
        let mut preds = vec![false; 20];
        preds[0] = true;
        preds[10] = true;
        preds[11] = true;
        let r = fairness_ratio(&preds, &labels, &groups, FairnessMetric::PredictiveEquality)
            .unwrap();
        assert!((r - 0.5).abs() < 1e-12);

        // identical rates → 1.0
        preds[11] = false;
        let r = fairness_ratio(&preds, &labels, &groups, FairnessMetric::PredictiveEquality)
            .unwrap();
        assert_eq!(r, 1.0);

        // one group at zero → 0.0
        preds[0] = false;
        preds[11] = true;
        let r = fairness_ratio(&preds, &labels, &groups, FairnessMetric::PredictiveEquality)
            .unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn both_rates_zero_is_parity() {
        let labels = [0u8, 0, 0, 0];
        let groups = [0u32, 0, 1, 1];
        let preds = [false, false, false, false];
        for metric in FairnessMetric::all() {
            if metric == FairnessMetric::EqualOpportunity {
                continue; // needs positives
            }
            assert_eq!(fairness_ratio(&preds, &labels, &groups, metric).unwrap(), 1.0);
        }
    }

    #[test]
    fn missing_denominator_is_error() {
        // group 1 has no negatives → predictive equality undefined
        let labels = [0u8, 0, 1, 1];
        let groups = [0u32, 0, 1, 1];
        let preds = [false, true, true, false];
        let err = fairness_ratio(&preds, &labels, &groups, FairnessMetric::PredictiveEquality)
            .unwrap_err();
        assert!(err.to_string().contains("group 1"), "{err}");
    }

    #[test]
    fn group_relabeling_is_symmetric() {
        let labels = [0u8, 1, 0, 1, 0, 1, 0, 0];
        let groups_a = [0u32, 0, 0, 1, 1, 1, 0, 1];
        let groups_b: Vec<u32> = groups_a.iter().map(|g| 1 - g).collect();
        let preds = [true, false, false, true, false, true, true, false];
        for metric in FairnessMetric::all() {
            let ra = fairness_ratio(&preds, &labels, &groups_a, metric).unwrap();
            let rb = fairness_ratio(&preds, &labels, &groups_b, metric).unwrap();
            assert_eq!(ra, rb);
        }
    }

    #[test]
    fn monotone_score_rescaling_preserves_ratios() {
        let labels = [0u8, 1, 0, 1, 0, 0, 1, 0, 1, 0, 0, 1];
        let groups = [0u32, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1];
        let scores: Vec<f64> = (0..12).map(|i| (i as f64) / 12.0).collect();
        let rescaled: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp()).collect();
        let t1 = threshold_at_fpr(&scores, &labels, 0.3).unwrap();
        let t2 = threshold_at_fpr(&rescaled, &labels, 0.3).unwrap();
        let p1 = classify(&scores, t1);
        let p2 = classify(&rescaled, t2);
        assert_eq!(p1, p2);
        for metric in FairnessMetric::all() {
            assert_eq!(
                fairness_ratio(&p1, &labels, &groups, metric).unwrap(),
                fairness_ratio(&p2, &labels, &groups, metric).unwrap()
            );
        }
    }
}
