//! Held-out evaluation of any [`Learner`] under a [`SplitPlan`].
//!
//! Each partition gets its own scaler, fitted on the training records only.
//! Test labels are read only after every test record has been scored; the
//! per-partition label audit is checked to hold that.

use serde::{Deserialize, Serialize};

use crate::data::{apply_mask, fit_scaler, Dataset, FeatureMask, SplitPlan};
use crate::error::{Error, Result};
use crate::learners::{Learner, Predictor};
use crate::metrics::{average_reports, confusion, ConfusionMatrix, MetricReport};

/// Scores and labels for one test partition.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionOutcome {
    pub test_indices: Vec<usize>,
    pub scores: Vec<f64>,
    pub predictions: Vec<u8>,
    pub labels: Vec<u8>,
}

impl PartitionOutcome {
    pub fn accuracy(&self) -> f64 {
        let hits = self.predictions.iter().zip(&self.labels).filter(|(p, y)| p == y).count();
        hits as f64 / self.labels.len() as f64
    }

    pub fn report(&self) -> Result<MetricReport> {
        MetricReport::from_scores(&self.labels, &self.predictions, &self.scores)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Mean over partitions, undefined entries skipped.
    pub report: MetricReport,
    pub per_partition: Vec<MetricReport>,
    /// Per metric, how many partitions had it undefined.
    pub skipped: [usize; 8],
    /// Confusion counts pooled over all test partitions.
    pub pooled: ConfusionMatrix,
}

/// Trains on `train_idx` and scores `test_idx` of `ds`.
pub fn run_partition<L: Learner>(
    learner: &L,
    ds: &Dataset,
    train_idx: &[usize],
    test_idx: &[usize],
) -> Result<PartitionOutcome> {
    let train = ds.subset(train_idx)?;
    let test = ds.subset(test_idx)?;
    let scaler = fit_scaler(&train);
    let model = learner.fit(&scaler.apply(&train)?)?;
    let test_scaled = scaler.apply(&test)?;

    let scores = model.score_all(&test_scaled)?;
    let predictions = scores.iter().map(|&s| u8::from(s >= 0.5)).collect();
    let reads = test.label_reads() + test_scaled.label_reads();
    if reads > 0 {
        return Err(Error::Leakage { reads });
    }
    Ok(PartitionOutcome {
        test_indices: test_idx.to_vec(),
        scores,
        predictions,
        labels: test.labels().to_vec(),
    })
}

pub fn evaluate<L: Learner>(learner: &L, ds: &Dataset, plan: &SplitPlan) -> Result<Evaluation> {
    evaluate_with(ds, plan, |_| Ok(learner)).map(|(e, _)| e)
}

/// Like [`evaluate`], but the learner for each partition is built by `make`
/// from that partition's training records (e.g. a feature search run on
/// the training fold only). Returns the learners alongside the evaluation.
pub fn evaluate_with<L, F>(ds: &Dataset, plan: &SplitPlan, mut make: F) -> Result<(Evaluation, Vec<L>)>
where
    L: Learner,
    F: FnMut(&Dataset) -> Result<L>,
{
    let mut learners = Vec::new();
    let mut outcomes = Vec::new();
    for (train, test) in plan.partitions(ds.labels())? {
        let learner = make(&ds.subset(&train)?)?;
        outcomes.push(run_partition(&learner, ds, &train, &test)?);
        learners.push(learner);
    }
    let per_partition = outcomes.iter().map(PartitionOutcome::report).collect::<Result<Vec<_>>>()?;
    let (report, skipped) = average_reports(&per_partition);
    let labels: Vec<u8> = outcomes.iter().flat_map(|o| o.labels.iter().copied()).collect();
    let preds: Vec<u8> = outcomes.iter().flat_map(|o| o.predictions.iter().copied()).collect();
    let evaluation = Evaluation { report, per_partition, skipped, pooled: confusion(&labels, &preds)? };
    Ok((evaluation, learners))
}

/// A learner restricted to a fixed feature subset. Its models accept
/// full-width rows and project them through the mask.
#[derive(Debug, Clone)]
pub struct Masked<L> {
    pub mask: FeatureMask,
    pub inner: L,
}

#[derive(Debug, Clone)]
pub struct MaskedModel<P> {
    pub mask: FeatureMask,
    pub inner: P,
}

impl<L: Learner> Learner for Masked<L> {
    type Model = MaskedModel<L::Model>;

    fn fit(&self, train: &Dataset) -> Result<Self::Model> {
        let inner = self.inner.fit(&apply_mask(train, &self.mask)?)?;
        Ok(MaskedModel { mask: self.mask.clone(), inner })
    }

    fn describe(&self) -> String {
        format!("{}[{}]", self.inner.describe(), self.mask)
    }
}

impl<P: Predictor> Predictor for MaskedModel<P> {
    fn n_in(&self) -> usize {
        self.mask.len()
    }

    fn score(&self, row: &[f64]) -> Result<f64> {
        self.inner.score(&self.mask.project(row)?)
    }
}
