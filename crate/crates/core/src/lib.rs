//! Hybrid filter / genetic-wrapper feature selection with a stacked
//! generalization ensemble, for binary classification of tabular data.
//!
//! The crate is organised bottom-up:
//!
//! * [`data`]: datasets, the Statlog heart parser, splits, scaling, masks
//! * [`metrics`]: confusion matrices, ratio metrics, AUC
//! * [`learners`]: seven base classifiers behind [`learners::Learner`]
//! * [`eval`]: held-out evaluation with per-partition scaling
//! * [`filter`]: symmetric-uncertainty FCBF and ReliefF
//! * [`ga`]: genetic search over feature masks
//! * [`stacking`]: two-level stacked ensembles and the stacked GA

pub mod data;
pub mod error;
pub mod eval;
pub mod filter;
pub mod ga;
pub mod learners;
pub mod metrics;
pub mod rng;
pub mod stacking;

pub use data::{Dataset, FeatureMask, SplitKind, SplitPlan};
pub use error::{Error, Result};
pub use eval::{evaluate, evaluate_with, Evaluation, Masked};
pub use learners::{ClassifierSpec, Family, Learner, Predictor, TrainedModel};
pub use metrics::{ConfusionMatrix, MetricReport};
pub use filter::{fcbf, relief, FilterResult};
pub use ga::{evolve, GAConfig, GAResult};
pub use stacking::{fit_stack, predict_stack, stacked_ga, MetaMode, StackSpec, StackedModel};
