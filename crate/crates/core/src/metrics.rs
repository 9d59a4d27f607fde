//! Confusion matrices and the scalar metrics derived from them.
//!
//! Class 1 (disease present) is the positive class. Ratio metrics whose
//! denominator is zero are `None` ("undefined"), never 0 or NaN.

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return arg_err(format!("{} labels vs {} predictions", y_true.len(), y_pred.len()));
    }
    if y_true.is_empty() {
        return arg_err("confusion matrix needs at least one record");
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => cm.tp += 1,
            (0, 1) => cm.fp += 1,
            (0, 0) => cm.tn += 1,
            (1, 0) => cm.fn_ += 1,
            _ => return arg_err(format!("non-binary entry ({t}, {p})")),
        }
    }
    Ok(cm)
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// The same counts with the roles of the two classes exchanged.
    pub fn swapped(&self) -> Self {
        Self { tp: self.tn, fp: self.fn_, tn: self.tp, fn_: self.fp }
    }

    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn sensitivity(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn specificity(&self) -> Option<f64> {
        ratio(self.tn, self.tn + self.fp)
    }

    pub fn ppv(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn npv(&self) -> Option<f64> {
        ratio(self.tn, self.tn + self.fn_)
    }

    pub fn f1(&self) -> Option<f64> {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }

    pub fn youden(&self) -> Option<f64> {
        Some(self.sensitivity()? + self.specificity()? - 1.0)
    }
}

/// Area under the ROC curve as the Mann-Whitney statistic: the probability
/// that a random positive outscores a random negative, ties counting half.
/// `None` when `y_true` holds a single class.
pub fn auc(y_true: &[u8], scores: &[f64]) -> Result<Option<f64>> {
    if y_true.len() != scores.len() {
        return arg_err(format!("{} labels vs {} scores", y_true.len(), scores.len()));
    }
    if y_true.iter().any(|&l| l > 1) {
        return arg_err("labels must be 0 or 1");
    }
    if scores.iter().any(|s| s.is_nan()) {
        return arg_err("scores contain NaN");
    }
    let n_pos = y_true.iter().filter(|&&l| l == 1).count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Ok(None);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Walk tied blocks in ascending score order. Each positive beats every
    // negative strictly below it and ties with those in its block.
    let mut wins = 0.0;
    let mut neg_below = 0usize;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let block = &order[start..end];
        let pos = block.iter().filter(|&&i| y_true[i] == 1).count();
        let neg = block.len() - pos;
        wins += pos as f64 * (neg_below as f64 + 0.5 * neg as f64);
        neg_below += neg;
        start = end;
    }
    Ok(Some(wins / (n_pos as f64 * n_neg as f64)))
}

pub const METRIC_NAMES: [&str; 8] =
    ["accuracy", "sensitivity", "specificity", "ppv", "npv", "f1", "youden", "auc"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub ppv: Option<f64>,
    pub npv: Option<f64>,
    pub f1: Option<f64>,
    pub youden: Option<f64>,
    pub auc: Option<f64>,
}

impl MetricReport {
    pub fn from_confusion(cm: &ConfusionMatrix, auc: Option<f64>) -> Self {
        Self {
            accuracy: cm.accuracy(),
            sensitivity: cm.sensitivity(),
            specificity: cm.specificity(),
            ppv: cm.ppv(),
            npv: cm.npv(),
            f1: cm.f1(),
            youden: cm.youden(),
            auc,
        }
    }

    pub fn from_scores(y_true: &[u8], y_pred: &[u8], scores: &[f64]) -> Result<Self> {
        let cm = confusion(y_true, y_pred)?;
        Ok(Self::from_confusion(&cm, auc(y_true, scores)?))
    }

    pub fn values(&self) -> [Option<f64>; 8] {
        [
            self.accuracy,
            self.sensitivity,
            self.specificity,
            self.ppv,
            self.npv,
            self.f1,
            self.youden,
            self.auc,
        ]
    }

    fn from_values(v: [Option<f64>; 8]) -> Self {
        Self {
            accuracy: v[0],
            sensitivity: v[1],
            specificity: v[2],
            ppv: v[3],
            npv: v[4],
            f1: v[5],
            youden: v[6],
            auc: v[7],
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        METRIC_NAMES
            .iter()
            .position(|n| *n == name)
            .and_then(|i| self.values()[i])
    }

    /// CSV cells in [`METRIC_NAMES`] order; undefined metrics print as
    /// `undefined`.
    pub fn csv_cells(&self, decimals: usize) -> Vec<String> {
        self.values()
            .iter()
            .map(|v| v.map_or_else(|| "undefined".into(), |x| format!("{x:.decimals$}")))
            .collect()
    }
}

/// Element-wise mean over reports, skipping undefined entries. Returns the
/// mean report and, per metric, how many reports were skipped.
pub fn average_reports(reports: &[MetricReport]) -> (MetricReport, [usize; 8]) {
    let mut sums = [0.0; 8];
    let mut counts = [0usize; 8];
    for r in reports {
        for (i, v) in r.values().iter().enumerate() {
            if let Some(x) = v {
                sums[i] += x;
                counts[i] += 1;
            }
        }
    }
    let mean = std::array::from_fn(|i| (counts[i] > 0).then(|| sums[i] / counts[i] as f64));
    let skipped = counts.map(|c| reports.len() - c);
    (MetricReport::from_values(mean), skipped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tallies() {
        assert_eq!(confusion(&[1, 1, 0, 0], &[1, 1, 0, 0]).unwrap(), ConfusionMatrix::new(2, 0, 2, 0));
        assert_eq!(confusion(&[1, 0], &[0, 1]).unwrap(), ConfusionMatrix::new(0, 1, 0, 1));
        assert_eq!(
            confusion(&[1, 1, 1, 0], &[1, 0, 1, 1]).unwrap(),
            ConfusionMatrix::new(2, 1, 0, 1)
        );
    }

    #[test]
    fn confusion_errors() {
        assert!(confusion(&[1, 0], &[1]).is_err());
        assert!(confusion(&[], &[]).is_err());
        assert!(confusion(&[2], &[1]).is_err());
    }

    #[test]
    fn worked_values() {
        let cm = ConfusionMatrix::new(50, 5, 40, 5);
        assert!((cm.accuracy().unwrap() - 0.90).abs() < 1e-15);
        let cm = ConfusionMatrix::new(9, 2, 8, 1);
        assert!((cm.sensitivity().unwrap() - 0.9).abs() < 1e-15);
        assert!((cm.specificity().unwrap() - 0.8).abs() < 1e-15);
        assert!((cm.youden().unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn zero_denominator_is_undefined() {
        let cm = ConfusionMatrix::new(0, 0, 7, 3);
        assert_eq!(cm.ppv(), None);
        assert_eq!(cm.sensitivity(), Some(0.0));
        let no_pos = ConfusionMatrix::new(0, 1, 4, 0);
        assert_eq!(no_pos.sensitivity(), None);
        assert_eq!(no_pos.youden(), None);
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0, 0, 1, 1], &[0.1, 0.2, 0.8, 0.9]).unwrap(), Some(1.0));
        assert_eq!(auc(&[0, 1, 0, 1], &[0.3; 4]).unwrap(), Some(0.5));
        assert_eq!(auc(&[1, 0, 1, 0], &[0.9, 0.8, 0.4, 0.1]).unwrap(), Some(0.75));
        assert_eq!(auc(&[1, 1], &[0.2, 0.4]).unwrap(), None);
        assert!(auc(&[1, 0], &[0.2]).is_err());
    }

    #[test]
    fn averaging_skips_undefined() {
        let a = MetricReport { accuracy: Some(0.5), ppv: None, ..Default::default() };
        let b = MetricReport { accuracy: Some(1.0), ppv: Some(0.4), ..Default::default() };
        let (mean, skipped) = average_reports(&[a, b]);
        assert_eq!(mean.accuracy, Some(0.75));
        assert_eq!(mean.ppv, Some(0.4));
        assert_eq!(skipped[3], 1);
        assert_eq!(skipped[0], 0);
        assert_eq!(mean.auc, None);
        assert_eq!(skipped[7], 2);
    }

    #[test]
    fn report_json_uses_flat_metric_names() {
        let cm = ConfusionMatrix::new(3, 1, 2, 0);
        let r = MetricReport::from_confusion(&cm, Some(0.9));
        let v = serde_json::to_value(r).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), 8);
        for name in METRIC_NAMES {
            assert!(v.get(name).is_some(), "{name}");
        }
        assert_eq!(r.csv_cells(2)[3], "0.75");
        let undefined = MetricReport::default();
        assert_eq!(serde_json::to_value(undefined).unwrap()["f1"], serde_json::Value::Null);
        assert_eq!(undefined.csv_cells(2)[0], "undefined");
    }

    proptest! {
        #[test]
        fn label_swap_duality(tp in 0u64..50, fp in 0u64..50, tn in 0u64..50, fn_ in 0u64..50) {
            prop_assume!(tp + fp + tn + fn_ > 0);
            let cm = ConfusionMatrix::new(tp, fp, tn, fn_);
            let sw = cm.swapped();
            prop_assert_eq!(cm.sensitivity(), sw.specificity());
            prop_assert_eq!(cm.specificity(), sw.sensitivity());
            prop_assert_eq!(cm.ppv(), sw.npv());
            prop_assert_eq!(cm.npv(), sw.ppv());
            prop_assert_eq!(cm.accuracy(), sw.accuracy());
            for v in [cm.accuracy(), cm.sensitivity(), cm.specificity(), cm.ppv(), cm.npv(), cm.f1()]
                .into_iter()
                .flatten()
            {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }

        #[test]
        fn auc_complement_without_ties(
            pairs in proptest::collection::btree_map(-1_000_000i64..1_000_000, 0u8..2, 2..30)
        ) {
            let (scores, y): (Vec<f64>, Vec<u8>) = pairs.into_iter().map(|(s, l)| (s as f64, l)).unzip();
            let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
            if let (Some(a), Some(b)) = (auc(&y, &scores).unwrap(), auc(&y, &neg).unwrap()) {
                prop_assert!((a + b - 1.0).abs() < 1e-12);
            }
        }
    }
}
