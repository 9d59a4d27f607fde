//! Immutable tabular datasets with binary labels, plus the operations that
//! carve them up: parsing, holdout and k-fold splits, z-score scaling and
//! feature masking.

mod mask;
mod parse;
mod scale;
mod split;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};

pub use mask::{apply_mask, FeatureMask};
pub use parse::{parse_csv, parse_statlog, read_dataset};
pub use scale::{fit_scaler, Scaler};
pub use split::{holdout_indices, holdout_split, kfold_indices, kfold_split, SplitKind, SplitPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Continuous,
    Binary,
    Ordinal,
    Nominal,
}

impl FeatureKind {
    /// Kinds whose values are compared by magnitude (scaled, range-normalised).
    pub fn is_numeric(self) -> bool {
        matches!(self, FeatureKind::Continuous | FeatureKind::Ordinal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    pub index: usize,
}

impl FeatureSpec {
    pub fn new(name: impl Into<String>, kind: FeatureKind, index: usize) -> Self {
        Self { name: name.into(), kind, index }
    }
}

/// Column metadata of the Statlog heart data, in file order.
pub const STATLOG_FEATURES: [(&str, FeatureKind); 13] = [
    ("age", FeatureKind::Continuous),
    ("sex", FeatureKind::Binary),
    ("chest pain", FeatureKind::Nominal),
    ("blood pressure", FeatureKind::Continuous),
    ("cholesterol", FeatureKind::Continuous),
    ("blood sugar", FeatureKind::Binary),
    ("electrocardiographic", FeatureKind::Ordinal),
    ("heart rate", FeatureKind::Continuous),
    ("exercise-induced angina", FeatureKind::Binary),
    ("ST depression", FeatureKind::Continuous),
    ("slope", FeatureKind::Ordinal),
    ("ca", FeatureKind::Ordinal),
    ("thal", FeatureKind::Nominal),
];

pub fn statlog_specs() -> Vec<FeatureSpec> {
    STATLOG_FEATURES
        .iter()
        .enumerate()
        .map(|(i, (name, kind))| FeatureSpec::new(*name, *kind, i))
        .collect()
}

/// Continuous specs named `x0..x{n-1}`, for data without metadata.
pub fn generic_specs(n: usize) -> Vec<FeatureSpec> {
    (0..n)
        .map(|i| FeatureSpec::new(format!("x{i}"), FeatureKind::Continuous, i))
        .collect()
}

/// Counts reads of a partition's labels.
#[derive(Debug, Default)]
struct LabelAudit(AtomicUsize);

/// An `m x n` feature matrix (row-major) with labels in `{0, 1}`.
///
/// Every call to [`Dataset::labels`] or [`Dataset::label`] is counted; the
/// evaluation harness uses the counter to prove that held-out labels are not
/// touched before predictions are made. `row`, `value` and `column` do not
/// count as label reads.
#[derive(Debug, Clone)]
pub struct Dataset {
    values: Vec<f64>,
    labels: Vec<u8>,
    specs: Vec<FeatureSpec>,
    m: usize,
    n: usize,
    audit: Arc<LabelAudit>,
}

impl Dataset {
    pub fn new(values: Vec<f64>, labels: Vec<u8>, specs: Vec<FeatureSpec>) -> Result<Self> {
        let m = labels.len();
        let n = specs.len();
        if m == 0 {
            return Err(Error::NoRecords);
        }
        if n == 0 {
            return arg_err("dataset needs at least one feature");
        }
        if values.len() != m * n {
            return arg_err(format!(
                "value count {} does not match {m} records x {n} features",
                values.len()
            ));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Domain(format!("label {bad} is not in {{0, 1}}")));
        }
        Ok(Self { values, labels, specs, m, n, audit: Arc::default() })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<u8>, specs: Option<Vec<FeatureSpec>>) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return arg_err(format!("row {i} has {} values, expected {n}", r.len()));
        }
        if rows.len() != labels.len() {
            return arg_err(format!("{} rows but {} labels", rows.len(), labels.len()));
        }
        let specs = specs.unwrap_or_else(|| generic_specs(n));
        Self::new(rows.concat(), labels, specs)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn specs(&self) -> &[FeatureSpec] {
        &self.specs
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n)
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Row-major feature values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> &[u8] {
        self.audit.0.fetch_add(1, Ordering::Relaxed);
        &self.labels
    }

    pub fn label(&self, i: usize) -> u8 {
        self.audit.0.fetch_add(1, Ordering::Relaxed);
        self.labels[i]
    }

    /// Number of label reads since this partition was created.
    pub fn label_reads(&self) -> usize {
        self.audit.0.load(Ordering::Relaxed)
    }

    /// Per-class record counts `[absent, present]`.
    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels().iter().filter(|&&l| l == 1).count();
        [self.m - ones, ones]
    }

    pub fn has_both_classes(&self) -> bool {
        let [a, b] = self.class_counts();
        a > 0 && b > 0
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Records at `indices`, in that order. The subset gets its own label audit.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::NoRecords);
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.m) {
            return arg_err(format!("record index {bad} out of range for {} records", self.m));
        }
        let mut values = Vec::with_capacity(indices.len() * self.n);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Self::new(values, labels, self.specs.clone())
    }

    /// Same records and labels with replaced feature values.
    pub(crate) fn with_values(&self, values: Vec<f64>, specs: Vec<FeatureSpec>) -> Result<Self> {
        Self::new(values, self.labels.clone(), specs)
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.specs.iter().map(|s| s.name.as_str()).collect()
    }
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values && self.labels == other.labels && self.specs == other.specs
    }
}
