//! Executes configured stages: optional feature selection (filter or GA)
//! followed by held-out evaluation of a classifier or stack.

use std::collections::BTreeMap;
use std::time::Instant;

use serde_json::{json, Value};
use stackga_core::data::apply_mask;
use stackga_core::filter::{fcbf_with_bins, relief_with, FilterMethod, ReliefOptions};
use stackga_core::ga::{evolve, GAResult};
use stackga_core::learners::{ClassifierSpec, Learner, Predictor, TrainedModel};
use stackga_core::rng::derive_seed;
use stackga_core::stacking::{StackSpec, StackedModel};
use stackga_core::{evaluate, evaluate_with, Dataset, Evaluation, FeatureMask, GAConfig, Masked, SplitPlan};

use crate::config::{ResolvedConfig, Stage};
use crate::error::CliError;

/// A single classifier or a stack, behind one learner type.
#[derive(Debug, Clone)]
pub enum Model {
    Single(ClassifierSpec),
    Stack(StackSpec),
}

pub enum AnyModel {
    Single(TrainedModel),
    Stack(StackedModel),
}

impl Learner for Model {
    type Model = AnyModel;

    fn fit(&self, train: &Dataset) -> stackga_core::Result<AnyModel> {
        Ok(match self {
            Model::Single(s) => AnyModel::Single(s.fit(train)?),
            Model::Stack(s) => AnyModel::Stack(s.fit(train)?),
        })
    }

    fn describe(&self) -> String {
        match self {
            Model::Single(s) => Learner::describe(s),
            Model::Stack(s) => s.describe(),
        }
    }
}

impl Predictor for AnyModel {
    fn n_in(&self) -> usize {
        match self {
            AnyModel::Single(m) => m.n_in(),
            AnyModel::Stack(m) => m.n_in(),
        }
    }

    fn score(&self, row: &[f64]) -> stackga_core::Result<f64> {
        match self {
            AnyModel::Single(m) => m.score(row),
            AnyModel::Stack(m) => m.score(row),
        }
    }
}

impl Stage {
    pub fn model(&self) -> Model {
        match self {
            Stage::Classifier { learner, .. } | Stage::Ga { learner, .. } => Model::Single(learner.clone()),
            Stage::Filter { downstream, .. } => Model::Single(downstream.clone()),
            Stage::Stack { stack, .. } | Stage::StackedGa { stack, .. } => Model::Stack(stack.clone()),
        }
    }

    pub fn ga(&self) -> Option<&GAConfig> {
        match self {
            Stage::Ga { ga, .. } | Stage::StackedGa { ga, .. } => Some(ga),
            _ => None,
        }
    }

    pub fn selects_features(&self) -> bool {
        matches!(self, Stage::Ga { .. } | Stage::StackedGa { .. } | Stage::Filter { .. })
    }
}

/// A feature subset chosen on some training data.
#[derive(Debug, Clone)]
pub struct Selection {
    pub mask: FeatureMask,
    /// Deterministic description of the search (GA result, filter weights).
    pub detail: Value,
    pub elapsed_ms: f64,
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

pub fn run_ga(ga: &GAConfig, model: &Model, train: &Dataset) -> stackga_core::Result<GAResult> {
    evolve(ga, model, train)
}

/// Runs the stage's feature selection on `train`, if it has one.
pub fn select(stage: &Stage, train: &Dataset) -> stackga_core::Result<Option<Selection>> {
    let start = Instant::now();
    match stage {
        Stage::Classifier { .. } | Stage::Stack { .. } => Ok(None),
        Stage::Ga { ga, .. } | Stage::StackedGa { ga, .. } => {
            let result = run_ga(ga, &stage.model(), train)?;
            let detail = serde_json::to_value(&result).expect("GA result serializes");
            Ok(Some(Selection { mask: result.best_mask, detail, elapsed_ms: ms_since(start) }))
        }
        Stage::Filter { method, delta, bins, k, iterations, selection, seed, .. } => {
            let result = match method {
                FilterMethod::Fcbf => fcbf_with_bins(train, *delta, *bins)?,
                FilterMethod::Relief => relief_with(
                    train,
                    &ReliefOptions { iterations: *iterations, k: *k, seed: *seed, selection: *selection },
                )?,
            };
            let mut detail = result.to_json();
            let elapsed_ms = detail
                .as_object_mut()
                .and_then(|o| o.remove("elapsed_ms"))
                .and_then(|v| v.as_f64())
                .unwrap_or_default();
            detail["ordering"] = json!(result.ordering);
            Ok(Some(Selection { mask: result.mask, detail, elapsed_ms }))
        }
    }
}

/// One stage evaluated under one split plan.
#[derive(Debug, Clone)]
pub struct StageOutcome {
    pub name: String,
    pub kind: &'static str,
    pub plan: String,
    pub nested: bool,
    pub evaluation: Evaluation,
    /// The selected subset (one per outer partition when nested).
    pub masks: Vec<FeatureMask>,
    pub details: Vec<Value>,
    pub selection_ms: f64,
    pub total_ms: f64,
}

impl StageOutcome {
    pub fn mode(&self) -> &'static str {
        if self.nested {
            "nested"
        } else {
            "single"
        }
    }
}

/// Runs stages, reusing each stage's whole-dataset selection across plans.
pub struct Runner<'a> {
    cfg: &'a ResolvedConfig,
    ds: &'a Dataset,
    selections: BTreeMap<usize, Option<Selection>>,
}

impl<'a> Runner<'a> {
    pub fn new(cfg: &'a ResolvedConfig, ds: &'a Dataset) -> Self {
        Self { cfg, ds, selections: BTreeMap::new() }
    }

    pub fn run(&mut self, index: usize, plan: &SplitPlan) -> Result<StageOutcome, CliError> {
        let stage = &self.cfg.pipeline[index];
        let fail = CliError::runtime(stage.name());
        let start = Instant::now();
        let model = stage.model();
        let nested = self.cfg.nested && stage.selects_features();

        let (evaluation, masks, details, selection_ms) = if nested {
            let mut ms = 0.0;
            let mut details = Vec::new();
            let (evaluation, learners) = evaluate_with(self.ds, plan, |train| {
                let s = select(stage, train)?.expect("selecting stage");
                ms += s.elapsed_ms;
                details.push(s.detail);
                Ok(Masked { mask: s.mask, inner: model.clone() })
            })
            .map_err(fail)?;
            (evaluation, learners.into_iter().map(|l| l.mask).collect(), details, ms)
        } else {
            if !self.selections.contains_key(&index) {
                let s = select(stage, self.ds).map_err(CliError::runtime(stage.name()))?;
                self.selections.insert(index, s);
            }
            match &self.selections[&index] {
                None => (evaluate(&model, self.ds, plan).map_err(fail)?, vec![], vec![], 0.0),
                Some(s) => {
                    let masked = Masked { mask: s.mask.clone(), inner: model };
                    let e = evaluate(&masked, self.ds, plan).map_err(fail)?;
                    (e, vec![s.mask.clone()], vec![s.detail.clone()], s.elapsed_ms)
                }
            }
        };
        Ok(StageOutcome {
            name: stage.name().to_string(),
            kind: stage.kind(),
            plan: plan.kind.to_string(),
            nested,
            evaluation,
            masks,
            details,
            selection_ms,
            total_ms: ms_since(start),
        })
    }
}

/// Best masks of `runs` repetitions of a GA stage's search on the whole
/// dataset; run `r` reseeds the GA with `derive_seed(ga.seed, [r])`.
pub fn importance_runs(stage: &Stage, ds: &Dataset, runs: usize) -> Result<Vec<GAResult>, CliError> {
    let ga = stage
        .ga()
        .ok_or_else(|| CliError::Config(format!("stage '{}' does not search features", stage.name())))?;
    let model = stage.model();
    (0..runs as u64)
        .map(|r| {
            let cfg = GAConfig { seed: derive_seed(ga.seed, &[r]), ..ga.clone() };
            run_ga(&cfg, &model, ds).map_err(CliError::runtime(stage.name()))
        })
        .collect()
}

/// Evaluates `downstream` on the filter's subset; used by the `filter`
/// subcommand.
pub fn downstream_accuracy(
    ds: &Dataset,
    mask: &FeatureMask,
    downstream: &ClassifierSpec,
    plan: &SplitPlan,
) -> stackga_core::Result<Evaluation> {
    let masked = apply_mask(ds, mask)?;
    evaluate(downstream, &masked, plan)
}
