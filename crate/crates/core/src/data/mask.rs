use std::fmt;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{arg_err, Result};

/// Feature subset over `n` columns; always has at least one bit set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<bool>", into = "Vec<bool>")]
pub struct FeatureMask(Vec<bool>);

impl FeatureMask {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if !bits.iter().any(|&b| b) {
            return arg_err("feature mask selects no features");
        }
        Ok(Self(bits))
    }

    pub fn full(n: usize) -> Self {
        Self(vec![true; n])
    }

    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        let mut bits = vec![false; n];
        for &i in indices {
            if i >= n {
                return arg_err(format!("feature index {i} out of range for {n} features"));
            }
            bits[i] = true;
        }
        Self::new(bits)
    }

    /// Decodes the low `n` bits of `code` (bit `j` = feature `j`).
    pub fn from_code(n: usize, code: u64) -> Result<Self> {
        Self::new((0..n).map(|j| code >> j & 1 == 1).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, j: usize) -> bool {
        self.0[j]
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(j, _)| j).collect()
    }

    pub fn and(&self, other: &FeatureMask) -> Result<Self> {
        if self.len() != other.len() {
            return arg_err("mask lengths differ");
        }
        Self::new(self.0.iter().zip(&other.0).map(|(a, b)| *a && *b).collect())
    }

    /// Re-expresses `self` over the columns `outer` selects.
    pub fn restrict_to(&self, outer: &FeatureMask) -> Result<Self> {
        if self.len() != outer.len() {
            return arg_err("mask lengths differ");
        }
        Self::new(outer.indices().into_iter().map(|j| self.0[j]).collect())
    }

    /// Picks the masked entries of a full-width row.
    pub fn project(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.len() {
            return arg_err(format!("row has {} values, mask covers {}", row.len(), self.len()));
        }
        Ok(row.iter().zip(&self.0).filter(|(_, &b)| b).map(|(v, _)| *v).collect())
    }
}

impl TryFrom<Vec<bool>> for FeatureMask {
    type Error = crate::Error;

    fn try_from(bits: Vec<bool>) -> Result<Self> {
        Self::new(bits)
    }
}

impl From<FeatureMask> for Vec<bool> {
    fn from(m: FeatureMask) -> Self {
        m.0
    }
}

impl fmt::Display for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|&b| f.write_str(if b { "1" } else { "0" }))
    }
}

/// Keeps the masked columns in their original relative order.
pub fn apply_mask(ds: &Dataset, mask: &FeatureMask) -> Result<Dataset> {
    if mask.len() != ds.n() {
        return arg_err(format!("mask covers {} features, dataset has {}", mask.len(), ds.n()));
    }
    let keep = mask.indices();
    let mut values = Vec::with_capacity(ds.m() * keep.len());
    for row in ds.rows() {
        values.extend(keep.iter().map(|&j| row[j]));
    }
    let specs = keep.iter().map(|&j| ds.specs()[j].clone()).collect();
    ds.with_values(values, specs)
}
