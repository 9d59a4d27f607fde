use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{arg_err, Error, Result};
use crate::rng;

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SplitKind {
    Holdout {
        fraction: f64,
        #[serde(default = "default_true")]
        stratified: bool,
    },
    Kfold {
        k: usize,
        #[serde(default = "default_true")]
        stratified: bool,
    },
}

impl SplitKind {
    pub fn holdout(fraction: f64) -> Self {
        SplitKind::Holdout { fraction, stratified: true }
    }

    pub fn kfold(k: usize) -> Self {
        SplitKind::Kfold { k, stratified: true }
    }
}

/// Short labels: `holdout` (0.75), `holdout:0.8`, `k10`, `kfold:10`, with an
/// optional `/plain` suffix to disable stratification.
impl FromStr for SplitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (body, stratified) = match s.strip_suffix("/plain") {
            Some(b) => (b, false),
            None => (s, true),
        };
        let bad = || Error::Config(format!("unrecognised split '{s}'"));
        if body == "holdout" {
            return Ok(SplitKind::Holdout { fraction: 0.75, stratified });
        }
        if let Some(f) = body.strip_prefix("holdout:") {
            let fraction = f.parse().map_err(|_| bad())?;
            return Ok(SplitKind::Holdout { fraction, stratified });
        }
        let k = body
            .strip_prefix("kfold:")
            .or_else(|| body.strip_prefix('k'))
            .ok_or_else(bad)?
            .parse()
            .map_err(|_| bad())?;
        Ok(SplitKind::Kfold { k, stratified })
    }
}

impl fmt::Display for SplitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (body, stratified) = match *self {
            SplitKind::Holdout { fraction: 0.75, stratified } => ("holdout".to_string(), stratified),
            SplitKind::Holdout { fraction, stratified } => (format!("holdout:{fraction}"), stratified),
            SplitKind::Kfold { k, stratified } => (format!("k{k}"), stratified),
        };
        write!(f, "{body}{}", if stratified { "" } else { "/plain" })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    #[serde(flatten)]
    pub kind: SplitKind,
    pub seed: u64,
}

impl SplitPlan {
    pub fn new(kind: SplitKind, seed: u64) -> Self {
        Self { kind, seed }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        match self.kind {
            SplitKind::Holdout { fraction, .. } => {
                if !(fraction > 0.0 && fraction < 1.0) {
                    return arg_err(format!("holdout fraction {fraction} must lie in (0, 1)"));
                }
                if m < 2 {
                    return arg_err("holdout needs at least 2 records");
                }
            }
            SplitKind::Kfold { k, .. } => {
                if k < 2 || k > m {
                    return arg_err(format!("k = {k} must satisfy 2 <= k <= m = {m}"));
                }
            }
        }
        Ok(())
    }

    /// `(train, test)` record indices for every partition of the plan.
    pub fn partitions(&self, labels: &[u8]) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
        match self.kind {
            SplitKind::Holdout { fraction, stratified } => {
                Ok(vec![holdout_indices(labels, fraction, stratified, self.seed)?])
            }
            SplitKind::Kfold { k, stratified } => {
                let m = labels.len();
                let folds = kfold_indices(labels, k, stratified, self.seed)?;
                Ok(folds
                    .into_iter()
                    .map(|test| {
                        let mut in_test = vec![false; m];
                        test.iter().for_each(|&i| in_test[i] = true);
                        let train = (0..m).filter(|&i| !in_test[i]).collect();
                        (train, test)
                    })
                    .collect())
            }
        }
    }
}

fn shuffled(m: usize, seed: u64, tag: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng::stream(seed, &[tag]));
    order
}

/// Per-class train quotas summing to `total`, by largest remainder.
fn class_quotas(counts: [usize; 2], fraction: f64, total: usize) -> [usize; 2] {
    let exact = counts.map(|c| c as f64 * fraction);
    let mut quota = exact.map(|e| e.floor() as usize);
    let mut missing = total.saturating_sub(quota[0] + quota[1]);
    let mut by_remainder = [0, 1];
    by_remainder.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for c in by_remainder.into_iter().cycle().take(4) {
        if missing > 0 && quota[c] < counts[c] {
            quota[c] += 1;
            missing -= 1;
        }
    }
    quota
}

/// Shuffles records with a seeded permutation and puts the first
/// `floor(fraction * m)` into train. When stratified, the walk over the
/// permutation fills per-class quotas instead, keeping the same train size.
pub fn holdout_indices(
    labels: &[u8],
    fraction: f64,
    stratified: bool,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let m = labels.len();
    SplitPlan::new(SplitKind::Holdout { fraction, stratified }, seed).validate(m)?;
    let n_train = (fraction * m as f64).floor() as usize;
    if n_train == 0 || n_train == m {
        return arg_err(format!(
            "holdout fraction {fraction} on {m} records leaves an empty partition"
        ));
    }
    let order = shuffled(m, seed, 0);
    if !stratified {
        let (train, test) = order.split_at(n_train);
        return Ok((train.to_vec(), test.to_vec()));
    }
    let ones = labels.iter().filter(|&&l| l == 1).count();
    let mut quota = class_quotas([m - ones, ones], fraction, n_train);
    let (mut train, mut test) = (Vec::with_capacity(n_train), Vec::with_capacity(m - n_train));
    for i in order {
        let c = labels[i] as usize;
        if quota[c] > 0 {
            quota[c] -= 1;
            train.push(i);
        } else {
            test.push(i);
        }
    }
    Ok((train, test))
}

/// Test-fold record indices (ascending within a fold). Records are dealt
/// round-robin from a seeded permutation; when stratified the permutation is
/// grouped by class first, so every fold gets `floor` or `ceil` of each
/// class's share.
pub fn kfold_indices(labels: &[u8], k: usize, stratified: bool, seed: u64) -> Result<Vec<Vec<usize>>> {
    let m = labels.len();
    SplitPlan::new(SplitKind::Kfold { k, stratified }, seed).validate(m)?;
    let mut order = shuffled(m, seed, 1);
    if stratified {
        order.sort_by_key(|&i| labels[i]);
    }
    let mut folds = vec![Vec::with_capacity(m / k + 1); k];
    for (pos, i) in order.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

pub fn holdout_split(ds: &Dataset, fraction: f64, stratified: bool, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = holdout_indices(ds.labels(), fraction, stratified, seed)?;
    Ok((ds.subset(&train)?, ds.subset(&test)?))
}

pub fn kfold_split(ds: &Dataset, k: usize, stratified: bool, seed: u64) -> Result<Vec<(Dataset, Dataset)>> {
    SplitPlan::new(SplitKind::Kfold { k, stratified }, seed)
        .partitions(ds.labels())?
        .into_iter()
        .map(|(train, test)| Ok((ds.subset(&train)?, ds.subset(&test)?)))
        .collect()
}
