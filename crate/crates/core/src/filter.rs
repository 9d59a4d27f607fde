//! Filter feature selection: symmetric-uncertainty FCBF and ReliefF.
//!
//! Information measures are in bits and operate on integer-coded vectors;
//! continuous columns are coded by equal-frequency binning first.

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureKind, FeatureMask};
use crate::error::{arg_err, Error, Result};
use crate::rng;

/// Equal-frequency binning into `0..bins`. Cut points are the last value of
/// each of the first `bins - 1` quantile slices of the sorted column; a value
/// equal to a cut point stays in the lower bin.
pub fn discretize(column: &[f64], bins: usize) -> Result<Vec<usize>> {
    if bins < 2 {
        return arg_err(format!("bins = {bins}, need at least 2"));
    }
    if column.len() < bins {
        return arg_err(format!("column of length {} cannot fill {bins} bins", column.len()));
    }
    if column.iter().any(|v| v.is_nan()) {
        return arg_err("column contains NaN");
    }
    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    let len = sorted.len();
    let cuts: Vec<f64> = (1..bins).map(|b| sorted[(b * len).div_ceil(bins) - 1]).collect();
    Ok(column
        .iter()
        .map(|v| cuts.iter().filter(|&&c| *v > c).count())
        .collect())
}

fn counts<K: Ord>(keys: impl Iterator<Item = K>) -> BTreeMap<K, usize> {
    let mut map = BTreeMap::new();
    for k in keys {
        *map.entry(k).or_insert(0) += 1;
    }
    map
}

/// `p * log2(1 / p)` for `p = c / m`.
fn surprisal_term(c: usize, m: f64) -> f64 {
    let c = c as f64;
    (c / m) * (m / c).log2()
}

pub fn entropy(v: &[usize]) -> f64 {
    let m = v.len() as f64;
    counts(v.iter()).values().map(|&c| surprisal_term(c, m)).sum()
}

fn check_pair(a: &[usize], b: &[usize]) -> Result<()> {
    if a.len() != b.len() {
        return arg_err(format!("vectors have lengths {} and {}", a.len(), b.len()));
    }
    if a.is_empty() {
        return arg_err("vectors are empty");
    }
    Ok(())
}

pub fn joint_entropy(a: &[usize], b: &[usize]) -> Result<f64> {
    check_pair(a, b)?;
    let m = a.len() as f64;
    Ok(counts(a.iter().zip(b)).values().map(|&c| surprisal_term(c, m)).sum())
}

/// Computed directly from the joint table, clamped at 0.
pub fn mutual_information(a: &[usize], b: &[usize]) -> Result<f64> {
    check_pair(a, b)?;
    let m = a.len() as f64;
    let ca = counts(a.iter());
    let cb = counts(b.iter());
    let mi: f64 = counts(a.iter().zip(b))
        .iter()
        .map(|((x, y), &c)| {
            let c = c as f64;
            (c / m) * (c * m / (ca[x] as f64 * cb[y] as f64)).log2()
        })
        .sum();
    Ok(mi.max(0.0))
}

/// `2 I(a; b) / (H(a) + H(b))`, or 0 when both entropies vanish.
pub fn symmetric_uncertainty(a: &[usize], b: &[usize]) -> Result<f64> {
    let mi = mutual_information(a, b)?;
    let h = entropy(a) + entropy(b);
    if h == 0.0 {
        return Ok(0.0);
    }
    Ok((2.0 * mi / h).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterMethod {
    Relief,
    Fcbf,
}

impl fmt::Display for FilterMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterMethod::Relief => "relief",
            FilterMethod::Fcbf => "fcbf",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureWeights {
    pub weights: Vec<f64>,
    pub method: FilterMethod,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterResult {
    pub mask: FeatureMask,
    pub weights: FeatureWeights,
    /// Selected features by decreasing relevance, then the rejected ones.
    pub ordering: Vec<usize>,
    /// Set when a parameter had to be adjusted (e.g. ReliefF `k` reduced).
    pub warning: Option<String>,
}

#[derive(Serialize)]
struct FilterJson<'a> {
    method: FilterMethod,
    selected: Vec<usize>,
    weights: &'a [f64],
    elapsed_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    warning: Option<&'a str>,
}

impl FilterResult {
    pub fn selected(&self) -> Vec<usize> {
        self.mask.indices()
    }

    pub fn elapsed_ms(&self) -> f64 {
        self.weights.elapsed.as_secs_f64() * 1e3
    }

    /// `{"method", "selected", "weights", "elapsed_ms"}` (plus `warning` if set).
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(FilterJson {
            method: self.weights.method,
            selected: self.selected(),
            weights: &self.weights.weights,
            elapsed_ms: self.elapsed_ms(),
            warning: self.warning.as_deref(),
        })
        .expect("filter result serializes")
    }
}

/// Indices sorted by decreasing score, lower index first on ties.
fn rank_desc(scores: &[f64], indices: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let mut idx: Vec<usize> = indices.into_iter().collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

fn ordering_for(scores: &[f64], mask: &FeatureMask) -> Vec<usize> {
    let mut ordering = rank_desc(scores, mask.indices());
    ordering.extend(rank_desc(scores, (0..mask.len()).filter(|&j| !mask.get(j))));
    ordering
}

pub const DEFAULT_BINS: usize = 10;

/// Integer codes per column: continuous columns are binned, the others are
/// coded by rank of their distinct values.
pub fn discretize_dataset(ds: &Dataset, bins: usize) -> Result<Vec<Vec<usize>>> {
    let bins = bins.min(ds.m());
    (0..ds.n())
        .map(|j| {
            let col = ds.column(j);
            if ds.specs()[j].kind == FeatureKind::Continuous && bins >= 2 {
                discretize(&col, bins)
            } else {
                let mut levels = col.clone();
                levels.sort_by(f64::total_cmp);
                levels.dedup();
                Ok(col
                    .iter()
                    .map(|v| levels.partition_point(|l| l < v))
                    .collect())
            }
        })
        .collect()
}

/// FCBF with the default 10 bins.
pub fn fcbf(ds: &Dataset, delta: f64) -> Result<FilterResult> {
    fcbf_with_bins(ds, delta, DEFAULT_BINS)
}

/// Keeps features whose SU with the class exceeds `delta`, then walks them
/// in decreasing SU order: each surviving feature removes every lower-ranked
/// one that it predicts at least as well as that feature predicts the class.
pub fn fcbf_with_bins(ds: &Dataset, delta: f64, bins: usize) -> Result<FilterResult> {
    if !(delta >= 0.0) {
        return arg_err(format!("delta = {delta} must be >= 0"));
    }
    let start = Instant::now();
    let codes = discretize_dataset(ds, bins)?;
    let class: Vec<usize> = ds.labels().iter().map(|&l| l as usize).collect();
    let su_class = codes
        .iter()
        .map(|c| symmetric_uncertainty(c, &class))
        .collect::<Result<Vec<_>>>()?;

    let ranked = rank_desc(&su_class, (0..ds.n()).filter(|&j| su_class[j] > delta));
    if ranked.is_empty() {
        return Err(Error::EmptySelection(format!(
            "no feature has symmetric uncertainty above delta = {delta}; try a lower delta"
        )));
    }
    let mut removed = vec![false; ranked.len()];
    for i in 0..ranked.len() {
        if removed[i] {
            continue;
        }
        let fi = ranked[i];
        for j in i + 1..ranked.len() {
            let fj = ranked[j];
            if !removed[j] && symmetric_uncertainty(&codes[fi], &codes[fj])? >= su_class[fj] {
                removed[j] = true;
            }
        }
    }
    let kept: Vec<usize> = ranked.iter().zip(&removed).filter(|(_, &r)| !r).map(|(&f, _)| f).collect();
    let mask = FeatureMask::from_indices(ds.n(), &kept)?;
    let ordering = ordering_for(&su_class, &mask);
    Ok(FilterResult {
        mask,
        ordering,
        weights: FeatureWeights { weights: su_class, method: FilterMethod::Fcbf, elapsed: start.elapsed() },
        warning: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReliefSelection {
    /// Keep every feature with weight > 0.
    Positive,
    /// Keep the `q` highest-weighted features.
    Top(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReliefOptions {
    /// Sampled records; `None` samples every record once.
    pub iterations: Option<usize>,
    pub k: usize,
    pub seed: u64,
    pub selection: ReliefSelection,
}

impl Default for ReliefOptions {
    fn default() -> Self {
        Self { iterations: None, k: 10, seed: 0, selection: ReliefSelection::Positive }
    }
}

/// ReliefF with the default selection rule (positive weights).
pub fn relief(ds: &Dataset, iterations: usize, k: usize, seed: u64) -> Result<FilterResult> {
    relief_with(ds, &ReliefOptions { iterations: Some(iterations), k, seed, ..Default::default() })
}

/// ReliefF weighting.
///
/// Records are sampled in a seeded order (cycling through a permutation).
/// For each, the `k` nearest hits and misses under the summed per-feature
/// `diff` are found, and
/// `w[f] += mean diff(f, x, miss) / iterations - mean diff(f, x, hit) / iterations`.
/// `diff` is range-normalised for continuous and ordinal features and a 0/1
/// mismatch indicator for binary and nominal ones.
pub fn relief_with(ds: &Dataset, opts: &ReliefOptions) -> Result<FilterResult> {
    let start = Instant::now();
    let labels = ds.labels();
    if !ds.has_both_classes() {
        return arg_err("relief needs both classes");
    }
    if opts.k == 0 {
        return arg_err("relief needs k >= 1");
    }
    let (m, n) = (ds.m(), ds.n());
    let iterations = opts.iterations.unwrap_or(m);
    if iterations == 0 {
        return arg_err("relief needs at least one iteration");
    }

    let scale: Vec<Option<f64>> = (0..n)
        .map(|j| {
            if ds.specs()[j].kind.is_numeric() {
                let col = ds.column(j);
                let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                Some(hi - lo)
            } else {
                None
            }
        })
        .collect();
    let diff = |j: usize, a: f64, b: f64| match scale[j] {
        Some(range) if range > 0.0 => (a - b).abs() / range,
        Some(_) => 0.0,
        None => f64::from(u8::from(a != b)),
    };

    let [n0, n1] = ds.class_counts();
    let hits_available = |c: u8| if c == 1 { n1 - 1 } else { n0 - 1 };
    let misses_available = |c: u8| if c == 1 { n0 } else { n1 };
    let smallest = hits_available(0).min(hits_available(1)).min(n0).min(n1);
    let warning = (smallest < opts.k).then(|| {
        format!("k reduced from {} to as few as {smallest}: a class has too few records", opts.k)
    });

    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng::stream(opts.seed, &[]));
    let sampled: Vec<usize> = order.iter().copied().cycle().take(iterations).collect();

    let contributions: Vec<Vec<f64>> = sampled
        .par_iter()
        .map(|&r| {
            let x = ds.row(r);
            let mut hits = Vec::new();
            let mut misses = Vec::new();
            for i in (0..m).filter(|&i| i != r) {
                let d: f64 = ds.row(i).iter().zip(x).enumerate().map(|(j, (a, b))| diff(j, *a, *b)).sum();
                if labels[i] == labels[r] {
                    hits.push((d, i));
                } else {
                    misses.push((d, i));
                }
            }
            let nearest = |v: &mut Vec<(f64, usize)>, k: usize| {
                v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                v.truncate(k);
            };
            nearest(&mut hits, opts.k.min(hits_available(labels[r])));
            nearest(&mut misses, opts.k.min(misses_available(labels[r])));
            let mut delta = vec![0.0; n];
            for (group, sign) in [(&misses, 1.0), (&hits, -1.0)] {
                if group.is_empty() {
                    continue;
                }
                let denom = (iterations * group.len()) as f64;
                for &(_, i) in group.iter() {
                    for (j, dj) in delta.iter_mut().enumerate() {
                        *dj += sign * diff(j, ds.value(i, j), x[j]) / denom;
                    }
                }
            }
            delta
        })
        .collect();
    let mut weights = vec![0.0; n];
    for c in &contributions {
        weights.iter_mut().zip(c).for_each(|(w, d)| *w += d);
    }

    let keep: Vec<usize> = match opts.selection {
        ReliefSelection::Positive => (0..n).filter(|&j| weights[j] > 0.0).collect(),
        ReliefSelection::Top(q) => {
            if q == 0 {
                return arg_err("top-q selection needs q >= 1");
            }
            rank_desc(&weights, 0..n).into_iter().take(q).collect()
        }
    };
    if keep.is_empty() {
        return Err(Error::EmptySelection(
            "no feature has a positive relief weight; use top-q selection instead".into(),
        ));
    }
    let mask = FeatureMask::from_indices(n, &keep)?;
    let ordering = ordering_for(&weights, &mask);
    Ok(FilterResult {
        mask,
        ordering,
        weights: FeatureWeights { weights, method: FilterMethod::Relief, elapsed: start.elapsed() },
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generic_specs;

    #[test]
    fn discretize_examples() {
        assert_eq!(discretize(&[1.0, 2.0, 3.0, 4.0], 2).unwrap(), vec![0, 0, 1, 1]);
        assert_eq!(discretize(&[7.0; 5], 3).unwrap(), vec![0; 5]);
        assert_eq!(
            discretize(&[3.0, 1.0, 2.0, 4.0, 6.0, 5.0], 3).unwrap(),
            vec![1, 0, 0, 1, 2, 2]
        );
        assert!(discretize(&[1.0, 2.0], 3).is_err());
        assert!(discretize(&[1.0, 2.0], 1).is_err());
    }

    #[test]
    fn ties_go_to_the_lower_bin() {
        // the first cut is 2.0; all copies of 2.0 stay in bin 0
        assert_eq!(discretize(&[1.0, 2.0, 2.0, 2.0, 3.0, 4.0], 2).unwrap(), vec![0, 0, 0, 0, 1, 1]);
    }

    #[test]
    fn information_examples() {
        assert!((entropy(&[0, 1, 0, 1, 1, 0]) - 1.0).abs() < 1e-15);
        assert_eq!(entropy(&[4, 4, 4]), 0.0);
        let a = [0, 0, 1, 1];
        let b = [0, 1, 0, 1];
        assert_eq!(mutual_information(&a, &b).unwrap(), 0.0);
        assert_eq!(symmetric_uncertainty(&a, &b).unwrap(), 0.0);
        assert_eq!(symmetric_uncertainty(&[0, 2, 1, 2, 0], &[0, 2, 1, 2, 0]).unwrap(), 1.0);
        assert_eq!(symmetric_uncertainty(&[3, 3], &[1, 1]).unwrap(), 0.0);
        assert!(mutual_information(&[0, 1], &[0]).is_err());
    }

    fn labelled(cols: &[Vec<f64>], labels: Vec<u8>) -> Dataset {
        let m = labels.len();
        let rows: Vec<Vec<f64>> = (0..m).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        Dataset::from_rows(&rows, labels, Some(generic_specs(cols.len()))).unwrap()
    }

    #[test]
    fn fcbf_keeps_one_of_two_copies() {
        let labels: Vec<u8> = (0..40).map(|i| u8::from(i % 5 < 2)).collect();
        let signal: Vec<f64> = labels.iter().enumerate().map(|(i, &l)| l as f64 * 3.0 + (i % 3) as f64).collect();
        let noise: Vec<f64> = (0..40).map(|i| ((i * 17) % 23) as f64).collect();
        let ds = labelled(&[signal.clone(), noise, signal], labels);
        let res = fcbf(&ds, 0.0).unwrap();
        assert!(res.mask.get(0) ^ res.mask.get(2), "selected {:?}", res.selected());
        assert_eq!(res.weights.weights[0], res.weights.weights[2]);
        assert_eq!(res.ordering.len(), 3);
    }

    #[test]
    fn fcbf_drops_independent_feature_and_errors_when_nothing_survives() {
        let labels = vec![0, 0, 1, 1, 0, 0, 1, 1];
        let relevant = vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0];
        let independent = vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
        let ds = labelled(&[relevant, independent.clone()], labels.clone());
        let res = fcbf(&ds, 0.01).unwrap();
        assert_eq!(res.selected(), vec![0]);
        let only_noise = labelled(&[independent], labels);
        assert!(matches!(fcbf(&only_noise, 0.01), Err(Error::EmptySelection(_))));
    }

    #[test]
    fn relief_constant_and_duplicate_columns() {
        let labels: Vec<u8> = (0..30).map(|i| u8::from(i % 3 == 0)).collect();
        let a: Vec<f64> = labels.iter().enumerate().map(|(i, &l)| l as f64 + (i % 4) as f64 * 0.1).collect();
        let constant = vec![2.5; 30];
        let ds = labelled(&[a.clone(), constant, a], labels);
        let res = relief(&ds, 30, 5, 1).unwrap();
        let w = &res.weights.weights;
        assert_eq!(w[1], 0.0);
        assert_eq!(w[0], w[2]);
        assert!(w.iter().all(|v| (-1.0..=1.0).contains(v)));
        assert_eq!(res.selected(), vec![0, 2]);
        assert!(res.warning.is_none());
    }

    #[test]
    fn relief_reduces_k_with_warning() {
        let ds = labelled(&[vec![0.0, 0.1, 1.0, 1.1, 0.2]], vec![0, 0, 1, 1, 0]);
        let res = relief_with(&ds, &ReliefOptions { k: 10, ..Default::default() }).unwrap();
        assert!(res.warning.is_some());
        assert!(res.weights.weights[0] > 0.0);
    }

    #[test]
    fn relief_top_q() {
        let labels: Vec<u8> = (0..20).map(|i| u8::from(i < 10)).collect();
        let cols: Vec<Vec<f64>> = (0..4)
            .map(|j| (0..20).map(|i| if j == 2 { labels[i] as f64 } else { ((i * (j + 3)) % 7) as f64 }).collect())
            .collect();
        let ds = labelled(&cols, labels);
        let opts = ReliefOptions { k: 3, selection: ReliefSelection::Top(1), ..Default::default() };
        let res = relief_with(&ds, &opts).unwrap();
        assert_eq!(res.selected(), vec![2]);
        assert_eq!(res.ordering[0], 2);
    }

    #[test]
    fn filter_json_shape() {
        let ds = labelled(&[vec![0.0, 1.0, 0.0, 1.0]], vec![0, 1, 0, 1]);
        let v = fcbf(&ds, 0.0).unwrap().to_json();
        assert_eq!(v["method"], "fcbf");
        assert_eq!(v["selected"], serde_json::json!([0]));
        assert!(v["elapsed_ms"].is_number());
        assert_eq!(v["weights"].as_array().unwrap().len(), 1);
    }
}
