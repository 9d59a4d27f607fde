//! Two-level stacked generalization and the stacked genetic wrapper.
//!
//! First-level learners `h_1..h_T` are trained on the data; their scores on
//! each record form a new `m x T` dataset on which the meta-learner `h'` is
//! trained. Prediction composes `h'(h_1(x), ..., h_T(x))`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{apply_mask, fit_scaler, Dataset, FeatureKind, FeatureMask, FeatureSpec, Scaler, SplitKind, SplitPlan};
use crate::error::{arg_err, Error, Result};
use crate::ga::{evolve, GAConfig, GAResult};
use crate::learners::{ClassifierSpec, Family, Learner, Predictor, TrainedModel};
use crate::rng;

/// How the meta-features of the training records are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetaMode {
    /// Each `h_t` scores the very records it was trained on.
    Resubstitution,
    /// Each record is scored by models trained without its fold.
    OutOfFold(usize),
}

impl fmt::Display for MetaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetaMode::Resubstitution => f.write_str("resub"),
            MetaMode::OutOfFold(k) => write!(f, "oof:{k}"),
        }
    }
}

impl FromStr for MetaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "resub" || s == "resubstitution" {
            return Ok(MetaMode::Resubstitution);
        }
        let k = s
            .strip_prefix("oof:")
            .and_then(|k| k.parse::<usize>().ok())
            .ok_or_else(|| Error::Config(format!("meta_mode '{s}' is neither 'resub' nor 'oof:<k>'")))?;
        if k < 2 {
            return Err(Error::Config(format!("meta_mode '{s}' needs k >= 2")));
        }
        Ok(MetaMode::OutOfFold(k))
    }
}

impl Serialize for MetaMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MetaMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStack")]
pub struct StackSpec {
    pub first_level: Vec<ClassifierSpec>,
    pub meta_learner: ClassifierSpec,
    pub meta_mode: MetaMode,
    /// Feed thresholded labels instead of scores to the meta-learner.
    #[serde(default)]
    pub hard_labels: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStack {
    first_level: Vec<ClassifierSpec>,
    meta_learner: ClassifierSpec,
    #[serde(default = "default_mode")]
    meta_mode: MetaMode,
    #[serde(default)]
    hard_labels: bool,
}

fn default_mode() -> MetaMode {
    MetaMode::OutOfFold(5)
}

impl TryFrom<RawStack> for StackSpec {
    type Error = Error;

    fn try_from(raw: RawStack) -> Result<Self> {
        let spec = StackSpec {
            first_level: raw.first_level,
            meta_learner: raw.meta_learner,
            meta_mode: raw.meta_mode,
            hard_labels: raw.hard_labels,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl StackSpec {
    pub fn new(first_level: Vec<ClassifierSpec>, meta_learner: ClassifierSpec, meta_mode: MetaMode) -> Result<Self> {
        let spec = Self { first_level, meta_learner, meta_mode, hard_labels: false };
        spec.validate()?;
        Ok(spec)
    }

    /// One learner per family with default hyperparameters, a logistic
    /// meta-learner and 5-fold out-of-fold meta-features. Seeds derive from
    /// `seed`.
    pub fn default_roster(seed: u64) -> Self {
        let first_level = Family::ALL
            .iter()
            .enumerate()
            .map(|(t, &f)| ClassifierSpec::new(f).with_seed(rng::derive_seed(seed, &[t as u64])))
            .collect();
        let meta = ClassifierSpec::new(Family::LogisticRegression).with_seed(rng::derive_seed(seed, &[7]));
        Self { first_level, meta_learner: meta, meta_mode: default_mode(), hard_labels: false }
    }

    pub fn t(&self) -> usize {
        self.first_level.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.first_level.is_empty() {
            return Err(Error::Config("stack needs at least one first-level learner".into()));
        }
        for (i, a) in self.first_level.iter().enumerate() {
            a.validate()?;
            if let Some(j) = self.first_level[..i].iter().position(|b| b == a) {
                return Err(Error::Config(format!("first-level learners {j} and {i} are identical")));
            }
        }
        self.meta_learner.validate()?;
        if let MetaMode::OutOfFold(k) = self.meta_mode {
            if k < 2 {
                return Err(Error::Config(format!("out-of-fold meta mode needs k >= 2, got {k}")));
            }
        }
        Ok(())
    }

    fn oof_seed(&self) -> u64 {
        rng::derive_seed(self.meta_learner.seed, &[0x00f_u64])
    }
}

/// First-level outputs, one column per learner, with the training labels.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaDataset {
    pub data: Dataset,
}

impl MetaDataset {
    pub fn m(&self) -> usize {
        self.data.m()
    }

    pub fn t(&self) -> usize {
        self.data.n()
    }

    pub fn z(&self, i: usize, t: usize) -> f64 {
        self.data.value(i, t)
    }

    pub fn labels(&self) -> &[u8] {
        self.data.labels()
    }
}

fn in_learner(t: usize, family: Family, e: Error) -> Error {
    let at = |msg: String| format!("first-level learner {t} ({family}): {msg}");
    match e {
        Error::Training(msg) => Error::Training(at(msg)),
        Error::Argument(msg) => Error::Argument(at(msg)),
        Error::Config(msg) => Error::Config(at(msg)),
        other => other,
    }
}

fn fit_all(spec: &StackSpec, train: &Dataset) -> Result<Vec<TrainedModel>> {
    spec.first_level
        .par_iter()
        .enumerate()
        .map(|(t, s)| s.fit(train).map_err(|e| in_learner(t, s.family, e)))
        .collect()
}

fn meta_value(score: f64, hard: bool) -> f64 {
    if hard {
        f64::from(u8::from(score >= 0.5))
    } else {
        score
    }
}

fn meta_specs(spec: &StackSpec) -> Vec<FeatureSpec> {
    spec.first_level
        .iter()
        .enumerate()
        .map(|(t, s)| FeatureSpec::new(format!("{}_{t}", s.family.short_name()), FeatureKind::Continuous, t))
        .collect()
}

/// Trains every first-level learner on `train` and builds the meta-dataset
/// according to the spec's meta mode.
pub fn build_meta(spec: &StackSpec, train: &Dataset) -> Result<(Vec<TrainedModel>, MetaDataset)> {
    spec.validate()?;
    if !train.has_both_classes() {
        return arg_err("stacking needs both classes in the training data");
    }
    let (m, t) = (train.m(), spec.t());
    let models = fit_all(spec, train)?;
    let mut z = vec![0.0; m * t];
    match spec.meta_mode {
        MetaMode::Resubstitution => {
            for (i, row) in train.rows().enumerate() {
                for (c, h) in models.iter().enumerate() {
                    z[i * t + c] = meta_value(h.score(row)?, spec.hard_labels);
                }
            }
        }
        MetaMode::OutOfFold(k) => {
            let plan = SplitPlan::new(SplitKind::Kfold { k, stratified: true }, spec.oof_seed());
            for (tr, te) in plan.partitions(train.labels())? {
                let fold_models = fit_all(spec, &train.subset(&tr)?)?;
                for &i in &te {
                    for (c, h) in fold_models.iter().enumerate() {
                        z[i * t + c] = meta_value(h.score(train.row(i))?, spec.hard_labels);
                    }
                }
            }
        }
    }
    let data = Dataset::new(z, train.labels().to_vec(), meta_specs(spec))?;
    Ok((models, MetaDataset { data }))
}

#[derive(Debug, Clone)]
pub struct StackedModel {
    pub first_level: Vec<TrainedModel>,
    pub meta_model: TrainedModel,
    pub spec: StackSpec,
}

pub fn fit_stack(spec: &StackSpec, train: &Dataset) -> Result<StackedModel> {
    let (first_level, meta) = build_meta(spec, train)?;
    let meta_model = spec
        .meta_learner
        .fit(&meta.data)
        .map_err(|e| match e {
            Error::Training(msg) => Error::Training(format!("meta-learner: {msg}")),
            other => other,
        })?;
    Ok(StackedModel { first_level, meta_model, spec: spec.clone() })
}

impl StackedModel {
    /// The length-`T` meta row for `x`.
    pub fn meta_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.first_level
            .iter()
            .map(|h| h.score(x).map(|s| meta_value(s, self.spec.hard_labels)))
            .collect()
    }
}

impl Predictor for StackedModel {
    fn n_in(&self) -> usize {
        self.first_level[0].n_in()
    }

    fn score(&self, row: &[f64]) -> Result<f64> {
        self.meta_model.score(&self.meta_row(row)?)
    }
}

/// Label and score of the stacked model on one row.
pub fn predict_stack(model: &StackedModel, x: &[f64]) -> Result<(u8, f64)> {
    let s = model.score(x)?;
    Ok((u8::from(s >= 0.5), s))
}

impl Learner for StackSpec {
    type Model = StackedModel;

    fn fit(&self, train: &Dataset) -> Result<StackedModel> {
        fit_stack(self, train)
    }

    fn describe(&self) -> String {
        let names: Vec<&str> = self.first_level.iter().map(|s| s.family.short_name()).collect();
        format!("stack({} | {}, {})", names.join("+"), self.meta_learner.family.short_name(), self.meta_mode)
    }
}

/// A stacked model fitted on a feature subset, with the scaler of that
/// subset. Accepts full-width raw rows.
#[derive(Debug, Clone)]
pub struct SelectedStack {
    pub mask: FeatureMask,
    pub scaler: Scaler,
    pub model: StackedModel,
}

impl Predictor for SelectedStack {
    fn n_in(&self) -> usize {
        self.mask.len()
    }

    fn score(&self, row: &[f64]) -> Result<f64> {
        self.model.score(&self.scaler.transform_row(&self.mask.project(row)?)?)
    }
}

/// GA over one shared feature mask whose fitness is the inner-CV accuracy
/// of the whole stack; the final stack is refitted on all of `train`
/// restricted to the best mask.
pub fn stacked_ga(spec: &StackSpec, config: &GAConfig, train: &Dataset) -> Result<(GAResult, SelectedStack)> {
    spec.validate()?;
    let result = evolve(config, spec, train)?;
    let masked = apply_mask(train, &result.best_mask)?;
    let scaler = fit_scaler(&masked);
    let model = fit_stack(spec, &scaler.apply(&masked)?)?;
    let selected = SelectedStack { mask: result.best_mask.clone(), scaler, model };
    Ok((result, selected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn noisy(m: usize, seed: u64) -> Dataset {
        let mut r = rng::stream(seed, &[]);
        let rows: Vec<Vec<f64>> = (0..m).map(|_| (0..3).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
        let labels = rows.iter().map(|x| u8::from(x[0] - x[1] > 0.0)).collect();
        Dataset::from_rows(&rows, labels, None).unwrap()
    }

    fn small_stack(mode: MetaMode) -> StackSpec {
        StackSpec::new(
            vec![
                ClassifierSpec::new(Family::Knn),
                ClassifierSpec::new(Family::NaiveBayes),
                ClassifierSpec::new(Family::Cart),
            ],
            ClassifierSpec::new(Family::LogisticRegression).with_param("epochs", 300),
            mode,
        )
        .unwrap()
    }

    #[test]
    fn meta_mode_strings() {
        assert_eq!("oof:5".parse::<MetaMode>().unwrap(), MetaMode::OutOfFold(5));
        assert_eq!("resub".parse::<MetaMode>().unwrap(), MetaMode::Resubstitution);
        assert!("oof:1".parse::<MetaMode>().is_err());
        assert!("cv".parse::<MetaMode>().is_err());
        assert_eq!(MetaMode::OutOfFold(3).to_string(), "oof:3");
    }

    #[test]
    fn spec_json_round_trip_and_validation() {
        let spec = small_stack(MetaMode::OutOfFold(4));
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains(r#""meta_mode":"oof:4""#), "{text}");
        assert_eq!(serde_json::from_str::<StackSpec>(&text).unwrap(), spec);
        let dup = r#"{"first_level":[{"family":"knn"},{"family":"knn"}],"meta_learner":{"family":"lr"}}"#;
        assert!(serde_json::from_str::<StackSpec>(dup).is_err());
        let empty = r#"{"first_level":[],"meta_learner":{"family":"lr"}}"#;
        assert!(serde_json::from_str::<StackSpec>(empty).is_err());
        let roster = StackSpec::default_roster(1);
        assert_eq!(roster.t(), 7);
        roster.validate().unwrap();
    }

    #[test]
    fn meta_dataset_dimensions_and_composition() {
        let ds = noisy(60, 1);
        for mode in [MetaMode::Resubstitution, MetaMode::OutOfFold(3)] {
            let spec = small_stack(mode);
            let (models, meta) = build_meta(&spec, &ds).unwrap();
            assert_eq!((meta.m(), meta.t(), models.len()), (60, 3, 3));
            let stacked = fit_stack(&spec, &ds).unwrap();
            assert_eq!(stacked.meta_model.n_in(), 3);
            for row in ds.rows() {
                let z: Vec<f64> = stacked.first_level.iter().map(|h| h.score(row).unwrap()).collect();
                let (label, score) = predict_stack(&stacked, row).unwrap();
                assert_eq!(score, stacked.meta_model.score(&z).unwrap());
                assert_eq!(label, stacked.meta_model.predict(&z).unwrap());
            }
            assert!(predict_stack(&stacked, &[0.0]).is_err());
        }
    }

    #[test]
    fn resubstitution_column_of_a_memoriser_equals_labels() {
        let ds = noisy(40, 2);
        let spec = StackSpec::new(
            vec![ClassifierSpec::new(Family::Knn).with_param("k", 1)],
            ClassifierSpec::new(Family::LogisticRegression),
            MetaMode::Resubstitution,
        )
        .unwrap();
        let (_, meta) = build_meta(&spec, &ds).unwrap();
        let col = meta.data.column(0);
        assert!(col.iter().zip(ds.labels()).all(|(z, &y)| *z == f64::from(y)));
    }

    #[test]
    fn hard_labels_are_binary() {
        let ds = noisy(30, 3);
        let mut spec = small_stack(MetaMode::Resubstitution);
        spec.hard_labels = true;
        let (_, meta) = build_meta(&spec, &ds).unwrap();
        assert!(meta.data.values().iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn failing_learner_is_named() {
        let ds = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0]], vec![0, 0, 1], None).unwrap();
        let spec = StackSpec::new(
            vec![ClassifierSpec::new(Family::NaiveBayes), ClassifierSpec::new(Family::Mlp)],
            ClassifierSpec::new(Family::LogisticRegression),
            MetaMode::OutOfFold(2),
        )
        .unwrap();
        let err = fit_stack(&spec, &ds).unwrap_err().to_string();
        assert!(err.contains("first-level learner 1 (mlp)"), "{err}");
    }

    #[test]
    fn stacked_ga_minimal_run() {
        let ds = noisy(30, 4);
        let cfg = GAConfig {
            population_size: 2,
            generations: 1,
            tournament_size: 1,
            elitism: 1,
            fitness_folds: 2,
            ..Default::default()
        };
        let (res, model) = stacked_ga(&small_stack(MetaMode::OutOfFold(2)), &cfg, &ds).unwrap();
        assert!(res.best_mask.count() >= 1);
        assert_eq!(model.n_in(), 3);
        assert!(model.score(ds.row(0)).is_ok());
    }
}
