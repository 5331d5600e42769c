//! Training-set interventions: utility-aware sampling and reweighing,
//! plus the random-sampling and count-reweighing baselines.
//!
//! Sampling interventions (`uasp`, `rps`) equalize group positive rates
//! by discarding label-negatives of the lower-prevalence group;
//! reweighing interventions (`uar`, `rw`) keep every row and attach
//! weights. All interventions are pure functions of their inputs and a
//! seed.

use serde::{Deserialize, Serialize};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::utility::{min_max_scale, ScalingMode, UtilityConfig, UtilityVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterventionKind {
    Uasp,
    Uar,
    Rps,
    Rw,
    None,
}

impl std::fmt::Display for InterventionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            InterventionKind::Uasp => "uasp",
            InterventionKind::Uar => "uar",
            InterventionKind::Rps => "rps",
            InterventionKind::Rw => "rw",
            InterventionKind::None => "none",
        };
        f.write_str(s)
    }
}

/// Inputs recorded alongside an intervention's output.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct InterventionProvenance {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub protected_column: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub utility: Option<UtilityConfig>,
}

/// Result of an intervention: the retained ids (a subset for sampling
/// kinds, all ids otherwise) and one nonnegative weight per retained row.
#[derive(Debug, Clone)]
pub struct InterventionResult {
    pub kind: InterventionKind,
    pub kept_ids: Vec<u64>,
    pub weights: Vec<f64>,
    pub warnings: Vec<String>,
    pub provenance: InterventionProvenance,
}

impl InterventionResult {
    /// Materialize the intervention against the dataset it was computed
    /// from: returns the retained rows (original order) and their weights.
    pub fn apply(&self, train: &Dataset) -> Result<(Dataset, Vec<f64>)> {
        let mut weight_of = std::collections::HashMap::with_capacity(self.kept_ids.len());
        for (id, w) in self.kept_ids.iter().zip(&self.weights) {
            weight_of.insert(*id, *w);
        }
        let mut indices = Vec::with_capacity(self.kept_ids.len());
        let mut weights = Vec::with_capacity(self.kept_ids.len());
        for (i, id) in train.ids().iter().enumerate() {
            if let Some(w) = weight_of.get(id) {
                indices.push(i);
                weights.push(*w);
            }
        }
        if indices.len() != self.kept_ids.len() {
            return Err(Error::Validation(
                "intervention ids do not all exist in the dataset".into(),
            ));
        }
        let mut warnings = Vec::new();
        let subset = train.subset(&indices, &mut warnings);
        Ok((subset, weights))
    }
}

/// Identity intervention: all rows kept with unit weight.
pub fn no_intervention(train: &Dataset) -> InterventionResult {
    InterventionResult {
        kind: InterventionKind::None,
        kept_ids: train.ids().to_vec(),
        weights: vec![1.0; train.n_rows()],
        warnings: Vec::new(),
        provenance: InterventionProvenance::default(),
    }
}

/// Group statistics used by the sampling interventions.
struct TwoGroups {
    /// Code of the lower-prevalence group.
    low: u32,
    low_pos: u64,
    low_rows: u64,
    high_pos: u64,
    high_rows: u64,
}

fn two_group_stats(train: &Dataset, protected_column: &str) -> Result<Option<TwoGroups>> {
    let col = train.protected_column(protected_column)?;
    let present = col.present_groups();
    if present.len() != 2 {
        return Err(Error::Validation(format!(
            "prevalence sampling requires exactly 2 groups in `{protected_column}`, found {}",
            present.len()
        )));
    }
    let (a, b) = (present[0], present[1]);
    let mut counts = [(0u64, 0u64); 2]; // (pos, rows) for a, b
    for (g, y) in col.groups.iter().zip(train.target()) {
        let slot = usize::from(*g == b);
        counts[slot].1 += 1;
        counts[slot].0 += u64::from(*y);
    }
    let (pa, na) = counts[0];
    let (pb, nb) = counts[1];
    // compare prevalences exactly: pa/na vs pb/nb
    let lhs = (pa as u128) * (nb as u128);
    let rhs = (pb as u128) * (na as u128);
    if lhs == rhs {
        return Ok(None); // already equal
    }
    let (low, low_pos, low_rows, high_pos, high_rows) = if lhs < rhs {
        (a, pa, na, pb, nb)
    } else {
        (b, pb, nb, pa, na)
    };
    Ok(Some(TwoGroups {
        low,
        low_pos,
        low_rows,
        high_pos,
        high_rows,
    }))
}

/// Smallest number of negatives to remove from the low-prevalence group
/// so its positive rate reaches the high group's:
/// `k = n_lo − ⌊pos_lo·n_hi / pos_hi⌋` (exact integer arithmetic).
fn required_removals(stats: &TwoGroups) -> Result<u64> {
    if stats.low_pos == 0 {
        return Err(Error::Validation(format!(
            "group {} has zero positives; the target prevalence {} is unreachable",
            stats.low,
            stats.high_pos as f64 / stats.high_rows as f64
        )));
    }
    let keep = (stats.low_pos as u128 * stats.high_rows as u128 / stats.high_pos as u128) as u64;
    Ok(stats.low_rows.saturating_sub(keep))
}

fn finish_sampling(
    train: &Dataset,
    kind: InterventionKind,
    removal_ids: Vec<u64>,
    warnings: Vec<String>,
    provenance: InterventionProvenance,
) -> InterventionResult {
    let removed: std::collections::HashSet<u64> = removal_ids.into_iter().collect();
    let kept_ids: Vec<u64> = train
        .ids()
        .iter()
        .copied()
        .filter(|id| !removed.contains(id))
        .collect();
    let weights = vec![1.0; kept_ids.len()];
    InterventionResult {
        kind,
        kept_ids,
        weights,
        warnings,
        provenance,
    }
}

/// Utility-aware prevalence sampling.
///
/// Discards label-negatives of the lower-prevalence group in ascending
/// utility order (ties by ascending id) until group positive rates are
/// equal to within one-instance granularity. Identity when prevalences
/// are already equal. If the group runs out of negatives, all of them
/// are removed and the residual gap is reported as a warning.
pub fn uasp(
    train: &Dataset,
    utilities: &UtilityVector,
    protected_column: &str,
) -> Result<InterventionResult> {
    if utilities.ids != train.ids() {
        return Err(Error::Validation(
            "utilities are not aligned with the training ids".into(),
        ));
    }
    let provenance = InterventionProvenance {
        protected_column: Some(protected_column.to_string()),
        utility: Some(utilities.config.clone()),
        ..Default::default()
    };
    let Some(stats) = two_group_stats(train, protected_column)? else {
        let mut r = no_intervention(train);
        r.kind = InterventionKind::Uasp;
        r.provenance = provenance;
        return Ok(r);
    };
    let k = required_removals(&stats)?;

    let col = train.protected_column(protected_column)?;
    // candidate negatives of the low-prevalence group, ordered by
    // (utility asc, id asc)
    let mut candidates: Vec<(f64, u64)> = (0..train.n_rows())
        .filter(|&i| col.groups[i] == stats.low && train.target()[i] == 0)
        .map(|i| (utilities.values[i], train.ids()[i]))
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut warnings = Vec::new();
    let take = (k as usize).min(candidates.len());
    if take < k as usize {
        let after = stats.low_pos as f64 / (stats.low_rows - take as u64) as f64;
        let target = stats.high_pos as f64 / stats.high_rows as f64;
        warnings.push(format!(
            "group {} has only {take} negatives; residual prevalence gap {:.6} remains",
            stats.low,
            target - after
        ));
    }
    let removal_ids: Vec<u64> = candidates[..take].iter().map(|(_, id)| *id).collect();
    Ok(finish_sampling(
        train,
        InterventionKind::Uasp,
        removal_ids,
        warnings,
        provenance,
    ))
}

/// Random prevalence sampling: same removal count as [`uasp`], but the
/// discarded negatives are chosen uniformly at random (deterministic
/// given `seed`).
pub fn rps(train: &Dataset, protected_column: &str, seed: u64) -> Result<InterventionResult> {
    let provenance = InterventionProvenance {
        protected_column: Some(protected_column.to_string()),
        seed: Some(seed),
        ..Default::default()
    };
    let Some(stats) = two_group_stats(train, protected_column)? else {
        let mut r = no_intervention(train);
        r.kind = InterventionKind::Rps;
        r.provenance = provenance;
        return Ok(r);
    };
    let k = required_removals(&stats)?;

    let col = train.protected_column(protected_column)?;
    let mut candidates: Vec<u64> = (0..train.n_rows())
        .filter(|&i| col.groups[i] == stats.low && train.target()[i] == 0)
        .map(|i| train.ids()[i])
        .collect();
    candidates.sort_unstable();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    candidates.shuffle(&mut rng);

    let mut warnings = Vec::new();
    let take = (k as usize).min(candidates.len());
    if take < k as usize {
        warnings.push(format!(
            "group {} has only {take} negatives; prevalences remain unequal",
            stats.low
        ));
    }
    let removal_ids = candidates[..take].to_vec();
    Ok(finish_sampling(
        train,
        InterventionKind::Rps,
        removal_ids,
        warnings,
        provenance,
    ))
}

/// Utility-aware reweighing: every row kept, weight = scaled utility.
///
/// `min_max` scaling maps utilities to [0,1]; `none` uses raw utilities
/// with negatives clamped to zero (a zero weight excludes the instance
/// from the fit). All-zero weights are rejected.
pub fn uar(
    train: &Dataset,
    utilities: &UtilityVector,
    scaling: ScalingMode,
) -> Result<InterventionResult> {
    if utilities.ids != train.ids() {
        return Err(Error::Validation(
            "utilities are not aligned with the training ids".into(),
        ));
    }
    let weights = match scaling {
        ScalingMode::MinMax => min_max_scale(&utilities.values)?,
        ScalingMode::None => {
            if let Some(i) = utilities.values.iter().position(|v| !v.is_finite()) {
                return Err(Error::Validation(format!(
                    "non-finite utility at position {i}"
                )));
            }
            utilities.values.iter().map(|v| v.max(0.0)).collect()
        }
    };
    if weights.iter().all(|w| *w == 0.0) {
        return Err(Error::Validation(
            "reweighing produced all-zero weights".into(),
        ));
    }
    Ok(InterventionResult {
        kind: InterventionKind::Uar,
        kept_ids: train.ids().to_vec(),
        weights,
        warnings: Vec::new(),
        provenance: InterventionProvenance {
            scaling: Some(scaling),
            utility: Some(utilities.config.clone()),
            ..Default::default()
        },
    })
}

/// Expected-over-observed count reweighing.
///
/// Each instance with group `z` and label `y` gets weight
/// `count(z)·count(y) / (n·count(z,y))`; weighted group positive rates
/// become equal. Supports two or more groups; an empty `(z,y)` cell is
/// an error.
pub fn rw(train: &Dataset, protected_column: &str) -> Result<InterventionResult> {
    let col = train.protected_column(protected_column)?;
    let present = col.present_groups();
    if present.len() < 2 {
        return Err(Error::Validation(format!(
            "reweighing requires at least 2 groups in `{protected_column}`"
        )));
    }
    let n = train.n_rows() as f64;
    let n_groups = col.n_groups();
    let mut group_count = vec![0u64; n_groups];
    let mut label_count = [0u64; 2];
    let mut cell_count = vec![[0u64; 2]; n_groups];
    for (g, y) in col.groups.iter().zip(train.target()) {
        group_count[*g as usize] += 1;
        label_count[*y as usize] += 1;
        cell_count[*g as usize][*y as usize] += 1;
    }
    for &g in &present {
        for y in 0..2 {
            if cell_count[g as usize][y] == 0 {
                return Err(Error::Validation(format!(
                    "cell (group {g}, label {y}) is empty; reweighing is undefined"
                )));
            }
        }
    }
    let weights: Vec<f64> = col
        .groups
        .iter()
        .zip(train.target())
        .map(|(g, y)| {
            let zc = group_count[*g as usize] as f64;
            let yc = label_count[*y as usize] as f64;
            let cell = cell_count[*g as usize][*y as usize] as f64;
            zc * yc / (n * cell)
        })
        .collect();
    Ok(InterventionResult {
        kind: InterventionKind::Rw,
        kept_ids: train.ids().to_vec(),
        weights,
        warnings: Vec::new(),
        provenance: InterventionProvenance {
            protected_column: Some(protected_column.to_string()),
            ..Default::default()
        },
    })
}
