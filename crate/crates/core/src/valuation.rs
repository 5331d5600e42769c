//! Per-instance entropy valuations toward the target or a protected
//! attribute.
//!
//! Two routes are provided. The out-of-bag route splits the data into
//! bags, fits every configured model on each bag's in-bag part, scores
//! prediction entropy on the held-out part, and averages each row's
//! entropies over every (bag, model) pair that held it out. The in-bag
//! route fits on the full data and scores entropy in-sample, measuring
//! epistemic rather than held-out uncertainty.
//!
//! When valuing a protected column, the design matrix is every other
//! column plus the target: the predictor estimates group membership from
//! (X, Y), so low entropy flags instances whose features and label carry
//! group information.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::{LearnerSpec, Model};

/// Which of the two entropy routes to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyAlgorithm {
    OutOfBag,
    InBag,
}

/// The variable a valuation is computed against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VarRole {
    Target,
    Protected(String),
}

impl fmt::Display for VarRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarRole::Target => write!(f, "target"),
            VarRole::Protected(name) => write!(f, "protected `{name}`"),
        }
    }
}

/// Configuration shared by both valuation algorithms.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValuationConfig {
    pub algorithm: EntropyAlgorithm,
    pub n_bags: usize,
    /// Fraction of rows held out in each bag's out-of-bag set.
    pub pct_unseen: f64,
    /// Models fitted per bag; entropies are averaged over all of them.
    pub models: Vec<LearnerSpec>,
    /// Opt-in label-stratified dealing when forming out-of-bag sets.
    #[serde(default)]
    pub stratified: bool,
    pub seed: u64,
}

impl Default for ValuationConfig {
    fn default() -> Self {
        ValuationConfig {
            algorithm: EntropyAlgorithm::OutOfBag,
            n_bags: 5,
            pct_unseen: 0.2,
            models: LearnerSpec::default_pair(0),
            stratified: false,
            seed: 0,
        }
    }
}

impl ValuationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::Validation("valuation needs at least one model".into()));
        }
        for m in &self.models {
            m.validate()?;
        }
        if self.algorithm == EntropyAlgorithm::OutOfBag {
            if self.n_bags == 0 {
                return Err(Error::Validation("n_bags must be at least 1".into()));
            }
            if !(self.pct_unseen > 0.0 && self.pct_unseen < 1.0) {
                return Err(Error::Validation(format!(
                    "pct_unseen must be in (0,1), got {}",
                    self.pct_unseen
                )));
            }
            if self.n_bags as f64 * self.pct_unseen < 1.0 {
                return Err(Error::Validation(format!(
                    "infeasible bagging: n_bags ({}) x pct_unseen ({}) < 1, rows cannot all be covered",
                    self.n_bags, self.pct_unseen
                )));
            }
        }
        Ok(())
    }
}

/// One bag: the rows a model trains on and the rows it scores.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bag {
    pub in_bag: Vec<u32>,
    pub out_of_bag: Vec<u32>,
}

/// All bags of one out-of-bag run. Within a bag, in/out sets partition
/// the rows without overlap; across bags every row appears in at least
/// one out-of-bag set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BagAssignment {
    pub bags: Vec<Bag>,
    n_rows: usize,
}

impl BagAssignment {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// Number of out-of-bag appearances per row.
    pub fn coverage_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_rows];
        for bag in &self.bags {
            for &i in &bag.out_of_bag {
                counts[i as usize] += 1;
            }
        }
        counts
    }

    fn assert_valid(&self) -> Result<()> {
        for (b, bag) in self.bags.iter().enumerate() {
            let mut seen = vec![false; self.n_rows];
            for &i in bag.in_bag.iter().chain(&bag.out_of_bag) {
                if seen[i as usize] {
                    return Err(Error::Validation(format!(
                        "bag {b}: row {i} appears in both sides"
                    )));
                }
                seen[i as usize] = true;
            }
            if bag.in_bag.len() + bag.out_of_bag.len() != self.n_rows {
                return Err(Error::Validation(format!(
                    "bag {b}: in/out sets do not partition the rows"
                )));
            }
        }
        if let Some(row) = self.coverage_counts().iter().position(|c| *c == 0) {
            return Err(Error::Validation(format!(
                "row {row} never appears in an out-of-bag set"
            )));
        }
        Ok(())
    }
}

/// Sample the bag structure for an out-of-bag run.
///
/// Each bag's out-of-bag set gets exactly `⌊n·pct_unseen⌋` rows, sampled
/// without replacement within the bag; rows may recur across bags. Full
/// coverage is guaranteed by first dealing a random permutation of all
/// rows cyclically into the out-of-bag slots, then filling the remaining
/// capacity uniformly at random. The in-bag set is the complement.
/// Deterministic given `cfg.seed`.
pub fn make_bags(n: usize, cfg: &ValuationConfig) -> Result<BagAssignment> {
    cfg.validate()?;
    let mut perm: Vec<u32> = (0..n as u32).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    perm.shuffle(&mut rng);
    build_bags(n, cfg, perm, cfg.seed)
}

/// Stratified variant: each class is shuffled and dealt cyclically in
/// turn, so every bag's out-of-bag share of each class is proportional
/// to within one row.
pub fn make_bags_stratified(labels: &[u8], cfg: &ValuationConfig) -> Result<BagAssignment> {
    cfg.validate()?;
    let n = labels.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut by_class: [Vec<u32>; 2] = [Vec::new(), Vec::new()];
    for (i, y) in labels.iter().enumerate() {
        by_class[usize::from(*y == 1)].push(i as u32);
    }
    by_class[0].shuffle(&mut rng);
    by_class[1].shuffle(&mut rng);
    let mut perm = by_class[0].clone();
    perm.extend_from_slice(&by_class[1]);
    build_bags(n, cfg, perm, cfg.seed)
}

fn build_bags(
    n: usize,
    cfg: &ValuationConfig,
    deal_order: Vec<u32>,
    seed: u64,
) -> Result<BagAssignment> {
    if n < 2 {
        return Err(Error::Validation("need at least 2 rows to form bags".into()));
    }
    let oob_size = (n as f64 * cfg.pct_unseen).floor() as usize;
    if oob_size == 0 {
        return Err(Error::Validation(format!(
            "pct_unseen {} leaves empty out-of-bag sets at n={n}",
            cfg.pct_unseen
        )));
    }
    if oob_size >= n {
        return Err(Error::Validation(
            "pct_unseen must leave a nonempty in-bag set".into(),
        ));
    }
    if cfg.n_bags * oob_size < n {
        return Err(Error::Validation(format!(
            "infeasible bagging: {} bags x {} out-of-bag rows cannot cover {n} rows",
            cfg.n_bags, oob_size
        )));
    }

    let mut oob: Vec<Vec<u32>> = vec![Vec::with_capacity(oob_size); cfg.n_bags];
    for (k, &row) in deal_order.iter().enumerate() {
        oob[k % cfg.n_bags].push(row);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut bags = Vec::with_capacity(cfg.n_bags);
    for rows in &mut oob {
        let mut member = vec![false; n];
        for &i in rows.iter() {
            member[i as usize] = true;
        }
        while rows.len() < oob_size {
            let candidate = rng.random_range(0..n as u32);
            if !member[candidate as usize] {
                member[candidate as usize] = true;
                rows.push(candidate);
            }
        }
        rows.sort_unstable();
        let in_bag: Vec<u32> = (0..n as u32).filter(|i| !member[*i as usize]).collect();
        bags.push(Bag {
            in_bag,
            out_of_bag: rows.clone(),
        });
    }
    let assignment = BagAssignment { bags, n_rows: n };
    assignment.assert_valid()?;
    Ok(assignment)
}

/// Shannon entropy of a Bernoulli prediction, in bits:
/// `−[p·log₂p + (1−p)·log₂(1−p)]` with `0·log₂0 ≡ 0`.
pub fn prediction_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Validation(format!(
            "probability must be in [0,1], got {p}"
        )));
    }
    let term = |q: f64| if q == 0.0 { 0.0 } else { -q * q.log2() };
    Ok(term(p) + term(1.0 - p))
}

/// Per-instance valuations for one variable, plus run warnings.
#[derive(Debug, Clone)]
pub struct Valuation {
    pub values: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Build the design matrix and label vector for valuing `var`.
///
/// For the target, the design is the dataset's feature matrix. For a
/// protected column, the design is the feature matrix with that column's
/// own encoding removed (when present) and the target appended; the
/// column must be binary.
pub fn design_matrix(d: &Dataset, var: &VarRole) -> Result<(Array2<f64>, Vec<u8>)> {
    match var {
        VarRole::Target => Ok((d.features().to_owned(), d.target().to_vec())),
        VarRole::Protected(name) => {
            let col = d.protected_column(name)?;
            if col.n_groups() != 2 {
                return Err(Error::Validation(format!(
                    "valuation requires a binary protected column; `{name}` has {} groups",
                    col.n_groups()
                )));
            }
            let drop_idx = if d.protected_in_features() {
                d.feature_names().iter().position(|f| f == name)
            } else {
                None
            };
            let keep: Vec<usize> = (0..d.n_features()).filter(|j| Some(*j) != drop_idx).collect();
            let n = d.n_rows();
            let mut x = Array2::<f64>::zeros((n, keep.len() + 1));
            for (out_j, &j) in keep.iter().enumerate() {
                for i in 0..n {
                    x[(i, out_j)] = d.features()[(i, j)];
                }
            }
            for i in 0..n {
                x[(i, keep.len())] = f64::from(d.target()[i]);
            }
            let labels: Vec<u8> = col.groups.iter().map(|g| *g as u8).collect();
            Ok((x, labels))
        }
    }
}

fn check_two_classes(labels: &[u8], var: &VarRole) -> Result<()> {
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(Error::Validation(format!(
            "{var} has a single class; valuation is undefined"
        )));
    }
    Ok(())
}

/// Out-of-bag entropy valuation of `var`.
///
/// Every (bag, model) pair fits on the bag's in-bag rows and contributes
/// prediction entropies for its out-of-bag rows; a row's valuation is the
/// mean over all pairs that held it out. Bags whose in-bag part has a
/// single class are skipped with a warning; a row losing all of its
/// contributions is an error. Output is identical for any degree of
/// parallelism: fits run concurrently but the reduction happens in fixed
/// (bag, model) order.
pub fn out_of_bag_valuation(d: &Dataset, var: &VarRole, cfg: &ValuationConfig) -> Result<Valuation> {
    cfg.validate()?;
    let (x, labels) = design_matrix(d, var)?;
    check_two_classes(&labels, var)?;
    let n = d.n_rows();
    let assignment = if cfg.stratified {
        make_bags_stratified(&labels, cfg)?
    } else {
        make_bags(n, cfg)?
    };
    assignment.assert_valid()?;

    let mut warnings = Vec::new();
    let mut tasks: Vec<(usize, usize)> = Vec::new();
    for (b, bag) in assignment.bags.iter().enumerate() {
        let has_both = {
            let mut saw = [false, false];
            for &i in &bag.in_bag {
                saw[usize::from(labels[i as usize] == 1)] = true;
            }
            saw[0] && saw[1]
        };
        if !has_both {
            warnings.push(format!(
                "bag {b}: in-bag rows have a single {var} class; skipping {} model fit(s)",
                cfg.models.len()
            ));
            continue;
        }
        for m in 0..cfg.models.len() {
            tasks.push((b, m));
        }
    }

    let entropies: Vec<Result<Vec<f64>>> = tasks
        .par_iter()
        .map(|&(b, m)| {
            let bag = &assignment.bags[b];
            fit_and_entropy(
                &cfg.models[m],
                x.view(),
                &labels,
                Some(&bag.in_bag),
                &bag.out_of_bag,
            )
        })
        .collect();

    let mut sums = vec![0.0f64; n];
    let mut counts = vec![0usize; n];
    for (t, result) in entropies.into_iter().enumerate() {
        let values = result.map_err(|e| {
            let (b, m) = tasks[t];
            e.with_context(&format!("bag {b}, model {m}"))
        })?;
        let (b, _) = tasks[t];
        for (k, &i) in assignment.bags[b].out_of_bag.iter().enumerate() {
            sums[i as usize] += values[k];
            counts[i as usize] += 1;
        }
    }

    if let Some(row) = counts.iter().position(|c| *c == 0) {
        return Err(Error::Validation(format!(
            "row id {} received no out-of-bag contributions after skips",
            d.ids()[row]
        )));
    }
    let values = sums
        .iter()
        .zip(&counts)
        .map(|(s, c)| s / *c as f64)
        .collect();
    Ok(Valuation { values, warnings })
}

/// In-bag entropy valuation of `var`: every model fits on the full data
/// and scores entropy in-sample; per-row mean over the models.
pub fn in_bag_valuation(d: &Dataset, var: &VarRole, cfg: &ValuationConfig) -> Result<Valuation> {
    if cfg.models.is_empty() {
        return Err(Error::Validation("valuation needs at least one model".into()));
    }
    for m in &cfg.models {
        m.validate()?;
    }
    let (x, labels) = design_matrix(d, var)?;
    check_two_classes(&labels, var)?;
    let n = d.n_rows();
    let all_rows: Vec<u32> = (0..n as u32).collect();

    let per_model: Vec<Result<Vec<f64>>> = cfg
        .models
        .par_iter()
        .map(|spec| fit_and_entropy(spec, x.view(), &labels, None, &all_rows))
        .collect();

    let mut sums = vec![0.0f64; n];
    for (m, result) in per_model.into_iter().enumerate() {
        let values = result.map_err(|e| e.with_context(&format!("model {m}")))?;
        for (i, v) in values.iter().enumerate() {
            sums[i] += v;
        }
    }
    let k = cfg.models.len() as f64;
    Ok(Valuation {
        values: sums.iter().map(|s| s / k).collect(),
        warnings: Vec::new(),
    })
}

/// Fit one model on `fit_rows` (or all rows) and return prediction
/// entropies for `score_rows`, in their order.
fn fit_and_entropy(
    spec: &LearnerSpec,
    x: ArrayView2<'_, f64>,
    labels: &[u8],
    fit_rows: Option<&[u32]>,
    score_rows: &[u32],
) -> Result<Vec<f64>> {
    let model = match fit_rows {
        Some(rows) => {
            let idx: Vec<usize> = rows.iter().map(|&i| i as usize).collect();
            let x_fit = x.select(ndarray::Axis(0), &idx);
            let y_fit: Vec<u8> = idx.iter().map(|&i| labels[i]).collect();
            Model::fit(spec, x_fit.view(), &y_fit, None)?
        }
        None => Model::fit(spec, x, labels, None)?,
    };
    let idx: Vec<usize> = score_rows.iter().map(|&i| i as usize).collect();
    let x_score = x.select(ndarray::Axis(0), &idx);
    let probs = model.predict_proba(x_score.view())?;
    probs.into_iter().map(prediction_entropy).collect()
}

/// Valuations of every instance toward the target and toward each
/// protected column, with the config echoed for provenance.
#[derive(Debug, Clone)]
pub struct ValuationVector {
    pub ids: Vec<u64>,
    pub v_y: Vec<f64>,
    /// Per protected column, aligned with `ids`.
    pub v_z: BTreeMap<String, Vec<f64>>,
    pub provenance: Option<ValuationConfig>,
    pub warnings: Vec<String>,
}

impl ValuationVector {
    /// Assemble from precomputed parts (tests and file loads).
    pub fn from_parts(
        ids: Vec<u64>,
        v_y: Vec<f64>,
        v_z: BTreeMap<String, Vec<f64>>,
    ) -> Result<Self> {
        if v_y.len() != ids.len() || v_z.values().any(|v| v.len() != ids.len()) {
            return Err(Error::Validation(
                "valuation vectors must align with the id list".into(),
            ));
        }
        Ok(ValuationVector {
            ids,
            v_y,
            v_z,
            provenance: None,
            warnings: Vec::new(),
        })
    }

    /// Compute `v_y` and a `v_z` per protected column with the configured
    /// algorithm. The runs share bagging splits because the bag
    /// construction is deterministic in `cfg.seed`.
    pub fn compute(d: &Dataset, cfg: &ValuationConfig) -> Result<ValuationVector> {
        let run = |var: &VarRole| -> Result<Valuation> {
            match cfg.algorithm {
                EntropyAlgorithm::OutOfBag => out_of_bag_valuation(d, var, cfg),
                EntropyAlgorithm::InBag => in_bag_valuation(d, var, cfg),
            }
        };
        let mut warnings = Vec::new();
        let y = run(&VarRole::Target)?;
        warnings.extend(y.warnings.iter().map(|w| format!("v_y: {w}")));
        let mut v_z = BTreeMap::new();
        for col in d.protected() {
            let z = run(&VarRole::Protected(col.name.clone()))?;
            warnings.extend(z.warnings.iter().map(|w| format!("v_z `{}`: {w}", col.name)));
            v_z.insert(col.name.clone(), z.values);
        }
        Ok(ValuationVector {
            ids: d.ids().to_vec(),
            v_y: y.values,
            v_z,
            provenance: Some(cfg.clone()),
            warnings,
        })
    }

    /// Write `id,v_y,v_z_<column>...` rows; floats in shortest
    /// round-trip form.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path.as_ref())?;
        let mut header = vec!["id".to_string(), "v_y".to_string()];
        header.extend(self.v_z.keys().map(|k| format!("v_z_{k}")));
        wtr.write_record(&header)?;
        let mut buf = String::new();
        for (r, id) in self.ids.iter().enumerate() {
            let mut record = vec![id.to_string()];
            buf.clear();
            write!(buf, "{}", self.v_y[r]).expect("formatting f64 cannot fail");
            record.push(buf.clone());
            for col in self.v_z.values() {
                buf.clear();
                write!(buf, "{}", col[r]).expect("formatting f64 cannot fail");
                record.push(buf.clone());
            }
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Read a file produced by [`ValuationVector::write_csv`].
    pub fn read_csv(path: impl AsRef<Path>) -> Result<ValuationVector> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
        let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
        if headers.first().map(String::as_str) != Some("id")
            || headers.get(1).map(String::as_str) != Some("v_y")
        {
            return Err(Error::Schema(format!(
                "{}: expected columns id,v_y,v_z_...",
                path.display()
            )));
        }
        let z_names: Vec<String> = headers[2..]
            .iter()
            .map(|h| {
                h.strip_prefix("v_z_")
                    .map(str::to_owned)
                    .ok_or_else(|| Error::Schema(format!("unexpected valuation column `{h}`")))
            })
            .collect::<Result<_>>()?;
        let mut ids = Vec::new();
        let mut v_y = Vec::new();
        let mut v_z: BTreeMap<String, Vec<f64>> =
            z_names.iter().map(|n| (n.clone(), Vec::new())).collect();
        for (row_no, record) in reader.records().enumerate() {
            let record = record?;
            let parse = |cell: &str, column: &str| -> Result<f64> {
                cell.trim().parse().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    row: row_no + 1,
                    column: column.to_string(),
                    message: format!("`{cell}` is not a number"),
                })
            };
            ids.push(record[0].trim().parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                row: row_no + 1,
                column: "id".into(),
                message: format!("`{}` is not an unsigned integer id", &record[0]),
            })?);
            v_y.push(parse(&record[1], "v_y")?);
            for (k, name) in z_names.iter().enumerate() {
                v_z.get_mut(name).unwrap().push(parse(&record[k + 2], name)?);
            }
        }
        ValuationVector::from_parts(ids, v_y, v_z)
    }

    /// Write the provenance config as a JSON sidecar next to the CSV.
    pub fn write_sidecar(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.provenance)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    /// True when every valuation is finite and in [0,1] (always the case
    /// for binary-target entropies).
    pub fn values_in_unit_interval(&self) -> bool {
        let ok = |v: &f64| v.is_finite() && (0.0..=1.0).contains(v);
        self.v_y.iter().all(ok) && self.v_z.values().all(|col| col.iter().all(ok))
    }
}
