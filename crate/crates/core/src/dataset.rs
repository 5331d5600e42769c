//! Tabular datasets with a binary target and protected attributes.
//!
//! A [`Dataset`] is immutable after construction: loading and generation
//! validate every invariant up front so downstream stages can assume
//! finite features, a 0/1 target, and ≥2 groups per protected column.

use std::collections::BTreeMap;
use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column roles for loading a CSV file into a [`Dataset`].
///
/// Feature columns are whatever remains after the target, protected, and
/// id columns are claimed. When `id_column` is absent, ids are synthesized
/// as `0..n-1` in file order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub target_column: String,
    pub protected_columns: Vec<String>,
    #[serde(default)]
    pub id_column: Option<String>,
    /// Columns to drop entirely (e.g. a precomputed weight column).
    #[serde(default)]
    pub ignore_columns: Vec<String>,
    /// Keep encoded protected columns inside the feature matrix so models
    /// see them at fit and inference time. Disable to hide them from X.
    #[serde(default = "default_true")]
    pub include_protected_in_features: bool,
}

fn default_true() -> bool {
    true
}

impl DatasetSchema {
    pub fn new(target: impl Into<String>, protected: Vec<String>) -> Self {
        DatasetSchema {
            target_column: target.into(),
            protected_columns: protected,
            id_column: None,
            ignore_columns: Vec::new(),
            include_protected_in_features: true,
        }
    }

    /// Check role disjointness; column existence is checked against the
    /// file header at load time.
    pub fn validate(&self) -> Result<()> {
        if self.protected_columns.is_empty() {
            return Err(Error::Schema("at least one protected column is required".into()));
        }
        let mut seen = HashSet::new();
        let mut roles: Vec<&String> = vec![&self.target_column];
        roles.extend(self.protected_columns.iter());
        if let Some(id) = &self.id_column {
            roles.push(id);
        }
        roles.extend(self.ignore_columns.iter());
        for name in roles {
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!(
                    "column `{name}` is assigned more than one role"
                )));
            }
        }
        Ok(())
    }
}

/// One categorical protected attribute, label-encoded as small integers.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtectedColumn {
    pub name: String,
    /// Per-row group code, `0..labels.len()`.
    pub groups: Vec<u32>,
    /// Original cell values, indexed by group code (first-appearance order).
    pub labels: Vec<String>,
}

impl ProtectedColumn {
    pub fn n_groups(&self) -> usize {
        self.labels.len()
    }

    /// Distinct group codes present in the column, ascending.
    pub fn present_groups(&self) -> Vec<u32> {
        let mut present: Vec<u32> = self.groups.iter().copied().collect::<HashSet<_>>().into_iter().collect();
        present.sort_unstable();
        present
    }
}

/// An ordered split of a dataset into train and test parts.
#[derive(Debug)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    /// Non-fatal issues, e.g. a side missing one label value.
    pub warnings: Vec<String>,
}

/// Validated tabular dataset: ids, feature matrix, binary target, and one
/// or more protected columns. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    ids: Vec<u64>,
    features: Array2<f64>,
    feature_names: Vec<String>,
    target: Vec<u8>,
    protected: Vec<ProtectedColumn>,
    /// Whether the trailing feature columns are the encoded protected
    /// columns (controls CSV round-tripping).
    protected_in_features: bool,
}

impl Dataset {
    /// Build a dataset, validating every invariant.
    ///
    /// When `protected_in_features` is true the final
    /// `protected.len()` feature columns must be the encoded protected
    /// columns (named after them).
    pub fn new(
        ids: Vec<u64>,
        features: Array2<f64>,
        feature_names: Vec<String>,
        target: Vec<u8>,
        protected: Vec<ProtectedColumn>,
        protected_in_features: bool,
    ) -> Result<Self> {
        let d = Dataset {
            ids,
            features,
            feature_names,
            target,
            protected,
            protected_in_features,
        };
        d.validate_structure()?;
        for col in &d.protected {
            if col.present_groups().len() < 2 {
                return Err(Error::Validation(format!(
                    "protected column `{}` has fewer than 2 groups present",
                    col.name
                )));
            }
        }
        Ok(d)
    }

    fn validate_structure(&self) -> Result<()> {
        let n = self.ids.len();
        if n == 0 {
            return Err(Error::Validation("dataset has no rows".into()));
        }
        if self.features.nrows() != n || self.target.len() != n {
            return Err(Error::Validation(
                "ids, features, and target must have the same length".into(),
            ));
        }
        if self.feature_names.len() != self.features.ncols() {
            return Err(Error::Validation(
                "feature_names length must match feature column count".into(),
            ));
        }
        let mut seen = HashSet::with_capacity(n);
        for id in &self.ids {
            if !seen.insert(*id) {
                return Err(Error::Validation(format!("duplicate row id {id}")));
            }
        }
        for (i, y) in self.target.iter().enumerate() {
            if *y > 1 {
                return Err(Error::Validation(format!(
                    "target value {} at row {} is not in {{0,1}}",
                    y, i
                )));
            }
        }
        if let Some(((r, c), v)) = self
            .features
            .indexed_iter()
            .find(|(_, v)| !v.is_finite())
        {
            return Err(Error::Validation(format!(
                "non-finite feature value {v} at row {r}, column `{}`",
                self.feature_names[c]
            )));
        }
        for col in &self.protected {
            if col.groups.len() != n {
                return Err(Error::Validation(format!(
                    "protected column `{}` length mismatch",
                    col.name
                )));
            }
            if let Some(g) = col.groups.iter().find(|g| **g as usize >= col.labels.len()) {
                return Err(Error::Validation(format!(
                    "protected column `{}` has group code {g} without a label",
                    col.name
                )));
            }
        }
        Ok(())
    }

    /// Subset constructor used by splits and sampling interventions.
    /// Structural invariants still hold; a side losing a label value or a
    /// protected group is reported as a warning instead of an error, since
    /// downstream operations that need them fail with specific messages.
    pub(crate) fn subset(&self, indices: &[usize], warnings: &mut Vec<String>) -> Dataset {
        let ids = indices.iter().map(|&i| self.ids[i]).collect();
        let features = self.features.select(ndarray::Axis(0), indices);
        let target: Vec<u8> = indices.iter().map(|&i| self.target[i]).collect();
        let protected = self
            .protected
            .iter()
            .map(|col| ProtectedColumn {
                name: col.name.clone(),
                groups: indices.iter().map(|&i| col.groups[i]).collect(),
                labels: col.labels.clone(),
            })
            .collect::<Vec<_>>();

        if !target.contains(&0) || !target.contains(&1) {
            warnings.push("subset contains a single target class".into());
        }
        for col in &protected {
            if col.present_groups().len() < 2 {
                warnings.push(format!(
                    "subset has a single group in protected column `{}`",
                    col.name
                ));
            }
        }
        Dataset {
            ids,
            features,
            feature_names: self.feature_names.clone(),
            target,
            protected,
            protected_in_features: self.protected_in_features,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn target(&self) -> &[u8] {
        &self.target
    }

    pub fn protected(&self) -> &[ProtectedColumn] {
        &self.protected
    }

    pub fn protected_in_features(&self) -> bool {
        self.protected_in_features
    }

    pub fn protected_column(&self, name: &str) -> Result<&ProtectedColumn> {
        self.protected
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::Schema(format!("protected column `{name}` not found")))
    }

    /// Positive-label rate per group of a protected column, keyed by
    /// group code, counted over the full dataset.
    pub fn group_prevalence(&self, protected_column: &str) -> Result<BTreeMap<u32, f64>> {
        let col = self.protected_column(protected_column)?;
        let mut pos: BTreeMap<u32, (u64, u64)> = BTreeMap::new();
        for (g, y) in col.groups.iter().zip(&self.target) {
            let e = pos.entry(*g).or_insert((0, 0));
            e.1 += 1;
            e.0 += u64::from(*y);
        }
        Ok(pos
            .into_iter()
            .map(|(g, (p, n))| (g, p as f64 / n as f64))
            .collect())
    }

    /// Deterministic row-order split: the first `⌊n·train_fraction⌋` rows
    /// form the training part, the rest the test part.
    pub fn split_ordered(&self, train_fraction: f64) -> Result<Split> {
        if self.n_rows() < 2 {
            return Err(Error::Validation("need at least 2 rows to split".into()));
        }
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::Validation(format!(
                "train_fraction must be in (0,1), got {train_fraction}"
            )));
        }
        let n = self.n_rows();
        let n_train = (n as f64 * train_fraction).floor() as usize;
        if n_train == 0 || n_train == n {
            return Err(Error::Validation(format!(
                "split with fraction {train_fraction} leaves an empty side (n={n})"
            )));
        }
        let mut warnings = Vec::new();
        let train_idx: Vec<usize> = (0..n_train).collect();
        let test_idx: Vec<usize> = (n_train..n).collect();
        let mut w_train = Vec::new();
        let train = self.subset(&train_idx, &mut w_train);
        let mut w_test = Vec::new();
        let test = self.subset(&test_idx, &mut w_test);
        warnings.extend(w_train.into_iter().map(|w| format!("train side: {w}")));
        warnings.extend(w_test.into_iter().map(|w| format!("test side: {w}")));
        Ok(Split {
            train,
            test,
            warnings,
        })
    }

    /// Opt-in random split: shuffles row order with the given seed, then
    /// performs the ordered split on the shuffled order.
    pub fn split_shuffled(&self, train_fraction: f64, seed: u64) -> Result<Split> {
        if self.n_rows() < 2 {
            return Err(Error::Validation("need at least 2 rows to split".into()));
        }
        let mut indices: Vec<usize> = (0..self.n_rows()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        indices.shuffle(&mut rng);
        let mut warnings = Vec::new();
        let shuffled = self.subset(&indices, &mut warnings);
        shuffled.split_ordered(train_fraction)
    }

    /// Load and validate a CSV file according to `schema`.
    ///
    /// Protected columns are label-encoded in first-appearance order; the
    /// mapping is stored on the column. The id column, when named, must
    /// hold unsigned integers.
    pub fn load_csv(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<Dataset> {
        schema.validate()?;
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
        let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();

        let col_index = |name: &str| -> Result<usize> {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Schema(format!("column `{name}` not found in {}", path.display())))
        };
        let target_idx = col_index(&schema.target_column)?;
        let protected_idx: Vec<usize> = schema
            .protected_columns
            .iter()
            .map(|c| col_index(c))
            .collect::<Result<_>>()?;
        let id_idx = schema.id_column.as_deref().map(col_index).transpose()?;

        let mut claimed: HashSet<usize> = protected_idx.iter().copied().collect();
        claimed.insert(target_idx);
        if let Some(i) = id_idx {
            claimed.insert(i);
        }
        for name in &schema.ignore_columns {
            if let Ok(i) = col_index(name) {
                claimed.insert(i);
            }
        }
        let feature_idx: Vec<usize> = (0..headers.len()).filter(|i| !claimed.contains(i)).collect();

        let mut ids = Vec::new();
        let mut target = Vec::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut prot_raw: Vec<Vec<String>> = vec![Vec::new(); protected_idx.len()];

        for (row_no, record) in reader.records().enumerate() {
            let record = record?;
            let row = row_no + 1;
            let parse_err = |column: &str, message: String| Error::Parse {
                path: path.to_path_buf(),
                row,
                column: column.to_string(),
                message,
            };

            match id_idx {
                Some(i) => {
                    let cell = &record[i];
                    let id: u64 = cell.trim().parse().map_err(|_| {
                        parse_err(&headers[i], format!("`{cell}` is not an unsigned integer id"))
                    })?;
                    ids.push(id);
                }
                None => ids.push(row_no as u64),
            }

            let ycell = record[target_idx].trim();
            match ycell {
                "0" => target.push(0u8),
                "1" => target.push(1u8),
                other => {
                    return Err(Error::Validation(format!(
                        "target column `{}` has non-binary value `{other}` at row {row}",
                        schema.target_column
                    )))
                }
            }

            for (k, &pi) in protected_idx.iter().enumerate() {
                prot_raw[k].push(record[pi].trim().to_string());
            }

            let mut feats = Vec::with_capacity(feature_idx.len());
            for &fi in &feature_idx {
                let cell = record[fi].trim();
                if cell.is_empty() {
                    return Err(parse_err(&headers[fi], "missing value".into()));
                }
                let v: f64 = cell
                    .parse()
                    .map_err(|_| parse_err(&headers[fi], format!("`{cell}` is not a number")))?;
                if !v.is_finite() {
                    return Err(parse_err(&headers[fi], format!("non-finite value `{cell}`")));
                }
                feats.push(v);
            }
            rows.push(feats);
        }

        if rows.is_empty() {
            return Err(Error::Validation(format!("{} has no data rows", path.display())));
        }

        let protected: Vec<ProtectedColumn> = schema
            .protected_columns
            .iter()
            .zip(prot_raw)
            .map(|(name, raw)| {
                let mut labels: Vec<String> = Vec::new();
                let mut codes = Vec::with_capacity(raw.len());
                for cell in raw {
                    let code = match labels.iter().position(|l| *l == cell) {
                        Some(p) => p as u32,
                        None => {
                            labels.push(cell);
                            (labels.len() - 1) as u32
                        }
                    };
                    codes.push(code);
                }
                ProtectedColumn {
                    name: name.clone(),
                    groups: codes,
                    labels,
                }
            })
            .collect();

        let n = rows.len();
        let base_width = feature_idx.len();
        let width = base_width + if schema.include_protected_in_features { protected.len() } else { 0 };
        let mut features = Array2::<f64>::zeros((n, width));
        for (r, feats) in rows.iter().enumerate() {
            for (c, v) in feats.iter().enumerate() {
                features[(r, c)] = *v;
            }
        }
        let mut feature_names: Vec<String> =
            feature_idx.iter().map(|&i| headers[i].clone()).collect();
        if schema.include_protected_in_features {
            for col in &protected {
                for (r, g) in col.groups.iter().enumerate() {
                    features[(r, feature_names.len())] = f64::from(*g);
                }
                feature_names.push(col.name.clone());
            }
        }

        Dataset::new(
            ids,
            features,
            feature_names,
            target,
            protected,
            schema.include_protected_in_features,
        )
    }

    /// Write the dataset as CSV: `id`, base feature columns, protected
    /// columns (original labels), then the target column `y`.
    ///
    /// Loading the output back with the matching schema reproduces the
    /// dataset exactly (floats are written in shortest round-trip form).
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv_impl(path.as_ref(), None)
    }

    /// [`Dataset::write_csv`] with a trailing per-row `weight` column.
    pub fn write_csv_with_weights(&self, path: impl AsRef<Path>, weights: &[f64]) -> Result<()> {
        if weights.len() != self.n_rows() {
            return Err(Error::Validation(
                "weights must have one entry per row".into(),
            ));
        }
        self.write_csv_impl(path.as_ref(), Some(weights))
    }

    fn write_csv_impl(&self, path: &Path, weights: Option<&[f64]>) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path)?;
        let n_base = self.base_feature_count();
        let mut header: Vec<String> = vec!["id".to_string()];
        header.extend(self.feature_names[..n_base].iter().cloned());
        header.extend(self.protected.iter().map(|c| c.name.clone()));
        header.push("y".to_string());
        if weights.is_some() {
            header.push("weight".to_string());
        }
        wtr.write_record(&header)?;

        let mut buf = String::new();
        for r in 0..self.n_rows() {
            let mut record: Vec<String> = Vec::with_capacity(header.len());
            record.push(self.ids[r].to_string());
            for c in 0..n_base {
                buf.clear();
                write!(buf, "{}", self.features[(r, c)]).expect("formatting f64 cannot fail");
                record.push(buf.clone());
            }
            for col in &self.protected {
                record.push(col.labels[col.groups[r] as usize].clone());
            }
            record.push(self.target[r].to_string());
            if let Some(w) = weights {
                buf.clear();
                write!(buf, "{}", w[r]).expect("formatting f64 cannot fail");
                record.push(buf.clone());
            }
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// The schema that reads back a file produced by [`Dataset::write_csv`].
    pub fn write_schema(&self) -> DatasetSchema {
        DatasetSchema {
            target_column: "y".to_string(),
            protected_columns: self.protected.iter().map(|c| c.name.clone()).collect(),
            id_column: Some("id".to_string()),
            ignore_columns: Vec::new(),
            include_protected_in_features: self.protected_in_features,
        }
    }

    /// Number of feature columns excluding any appended protected columns.
    pub fn base_feature_count(&self) -> usize {
        if self.protected_in_features {
            self.feature_names.len() - self.protected.len()
        } else {
            self.feature_names.len()
        }
    }
}
