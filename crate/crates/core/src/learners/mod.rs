//! The seven base classifiers behind one interface.
//!
//! Every model exposes a score in `[0, 1]` for class 1 and predicts 1 iff
//! the score is at least 0.5, so stacking meta-features are comparable
//! across families.

mod knn;
mod linear;
pub mod mlp;
mod naive_bayes;
mod params;
mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::Dataset;
use crate::error::{arg_err, Error, Result};

pub use linear::{logistic_loss_and_gradient, LinearModel};
pub use mlp::Network;
pub use params::{
    CartParams, ForestParams, KnnParams, LogisticParams, MlpParams, NaiveBayesParams, SvmParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Knn,
    NaiveBayes,
    Cart,
    RandomForest,
    LogisticRegression,
    LinearSvm,
    Mlp,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::RandomForest,
        Family::Knn,
        Family::Mlp,
        Family::Cart,
        Family::NaiveBayes,
        Family::LogisticRegression,
        Family::LinearSvm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Knn => "knn",
            Family::NaiveBayes => "naive_bayes",
            Family::Cart => "cart",
            Family::RandomForest => "random_forest",
            Family::LogisticRegression => "logistic_regression",
            Family::LinearSvm => "linear_svm",
            Family::Mlp => "mlp",
        }
    }

    /// Abbreviation used in report tables.
    pub fn short_name(self) -> &'static str {
        match self {
            Family::Knn => "knn",
            Family::NaiveBayes => "nb",
            Family::Cart => "cart",
            Family::RandomForest => "rf",
            Family::LogisticRegression => "lr",
            Family::LinearSvm => "svm",
            Family::Mlp => "mlp",
        }
    }

    /// Whether training needs both classes present.
    pub fn is_discriminative(self) -> bool {
        matches!(self, Family::LogisticRegression | Family::LinearSvm | Family::Mlp)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let f = match s.trim().to_ascii_lowercase().as_str() {
            "knn" | "k-nn" => Family::Knn,
            "naive_bayes" | "nb" => Family::NaiveBayes,
            "cart" | "dtree" | "dt" | "decision_tree" => Family::Cart,
            "random_forest" | "rf" | "rfc" => Family::RandomForest,
            "logistic_regression" | "lr" => Family::LogisticRegression,
            "linear_svm" | "svm" => Family::LinearSvm,
            "mlp" => Family::Mlp,
            _ => return Err(Error::Config(format!("unknown classifier family '{s}'"))),
        };
        Ok(f)
    }
}

/// A classifier family, its hyperparameters and a seed.
///
/// Hyperparameters not given fall back to the family defaults; unknown keys
/// are rejected when the spec is validated or deserialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct ClassifierSpec {
    pub family: Family,
    #[serde(default)]
    pub hyperparameters: BTreeMap<String, Value>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    family: String,
    #[serde(default)]
    hyperparameters: BTreeMap<String, Value>,
    #[serde(default)]
    seed: u64,
}

impl TryFrom<RawSpec> for ClassifierSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        let spec = ClassifierSpec {
            family: raw.family.parse()?,
            hyperparameters: raw.hyperparameters,
            seed: raw.seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl ClassifierSpec {
    pub fn new(family: Family) -> Self {
        Self { family, hyperparameters: BTreeMap::new(), seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.hyperparameters.insert(key.to_string(), value.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.resolve().map(|_| ())
    }

    pub(crate) fn resolve(&self) -> Result<params::Resolved> {
        params::Resolved::new(self.family, &self.hyperparameters)
    }

    pub fn fit(&self, train: &Dataset) -> Result<TrainedModel> {
        fit(self, train)
    }
}

/// Anything that can be trained on a dataset to give a [`Predictor`].
pub trait Learner: Sync {
    type Model: Predictor + Send + Sync;

    fn fit(&self, train: &Dataset) -> Result<Self::Model>;

    fn describe(&self) -> String;
}

impl<L: Learner + ?Sized> Learner for &L {
    type Model = L::Model;

    fn fit(&self, train: &Dataset) -> Result<Self::Model> {
        (**self).fit(train)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

pub trait Predictor {
    /// Expected row width.
    fn n_in(&self) -> usize;

    /// Confidence for class 1, in `[0, 1]`.
    fn score(&self, row: &[f64]) -> Result<f64>;

    fn predict(&self, row: &[f64]) -> Result<u8> {
        Ok(u8::from(self.score(row)? >= 0.5))
    }

    fn score_all(&self, ds: &Dataset) -> Result<Vec<f64>> {
        ds.rows().map(|r| self.score(r)).collect()
    }
}

impl Learner for ClassifierSpec {
    type Model = TrainedModel;

    fn fit(&self, train: &Dataset) -> Result<TrainedModel> {
        fit(self, train)
    }

    fn describe(&self) -> String {
        self.family.short_name().to_string()
    }
}

#[derive(Debug, Clone)]
enum ModelState {
    Knn(knn::Knn),
    NaiveBayes(naive_bayes::GaussianNb),
    Cart(tree::Tree),
    Forest(tree::Forest),
    Logistic(LinearModel),
    Svm(LinearModel),
    Mlp(Network),
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    spec: ClassifierSpec,
    n_in: usize,
    state: ModelState,
}

pub fn fit(spec: &ClassifierSpec, train: &Dataset) -> Result<TrainedModel> {
    let resolved = spec.resolve()?;
    if !train.all_finite() {
        return arg_err("training data contains non-finite values");
    }
    if spec.family.is_discriminative() && !train.has_both_classes() {
        return Err(Error::Training(format!(
            "{} needs both classes in the training data",
            spec.family
        )));
    }
    let state = match resolved {
        params::Resolved::Knn(p) => ModelState::Knn(knn::Knn::fit(&p, train)),
        params::Resolved::NaiveBayes(p) => ModelState::NaiveBayes(naive_bayes::GaussianNb::fit(&p, train)),
        params::Resolved::Cart(p) => ModelState::Cart(tree::Tree::fit_cart(&p, train)),
        params::Resolved::Forest(p) => ModelState::Forest(tree::Forest::fit(&p, train, spec.seed)),
        params::Resolved::Logistic(p) => ModelState::Logistic(LinearModel::fit_logistic(&p, train)),
        params::Resolved::Svm(p) => ModelState::Svm(LinearModel::fit_svm(&p, train, spec.seed)),
        params::Resolved::Mlp(p) => ModelState::Mlp(mlp::train(&p, train, spec.seed)),
    };
    Ok(TrainedModel { spec: spec.clone(), n_in: train.n(), state })
}

impl TrainedModel {
    pub fn spec(&self) -> &ClassifierSpec {
        &self.spec
    }

    /// A logistic model with fixed coefficients, e.g. a hand-built meta-learner.
    pub fn logistic_from_weights(weights: Vec<f64>, bias: f64) -> Self {
        Self {
            spec: ClassifierSpec::new(Family::LogisticRegression),
            n_in: weights.len(),
            state: ModelState::Logistic(LinearModel { weights, bias }),
        }
    }

    /// Coefficients of a logistic or SVM model.
    pub fn linear_coefficients(&self) -> Option<&LinearModel> {
        match &self.state {
            ModelState::Logistic(m) | ModelState::Svm(m) => Some(m),
            _ => None,
        }
    }

    pub fn network(&self) -> Option<&Network> {
        match &self.state {
            ModelState::Mlp(n) => Some(n),
            _ => None,
        }
    }

    fn raw_score(&self, row: &[f64]) -> f64 {
        match &self.state {
            ModelState::Knn(m) => m.score(row),
            ModelState::NaiveBayes(m) => m.score(row),
            ModelState::Cart(m) => m.score(row),
            ModelState::Forest(m) => m.score(row),
            ModelState::Logistic(m) | ModelState::Svm(m) => linear::sigmoid(m.margin(row)),
            ModelState::Mlp(m) => m.forward(row),
        }
    }
}

impl Predictor for TrainedModel {
    fn n_in(&self) -> usize {
        self.n_in
    }

    fn score(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.n_in {
            return arg_err(format!("row has {} values, model expects {}", row.len(), self.n_in));
        }
        Ok(self.raw_score(row))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_names_and_aliases() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
            assert_eq!(f.short_name().parse::<Family>().unwrap(), f);
        }
        assert!("rbf".parse::<Family>().is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = ClassifierSpec::new(Family::Knn).with_param("k", 3).with_seed(9);
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(text, r#"{"family":"knn","hyperparameters":{"k":3},"seed":9}"#);
        assert_eq!(serde_json::from_str::<ClassifierSpec>(&text).unwrap(), spec);
    }

    #[test]
    fn unknown_hyperparameter_is_a_load_error() {
        let err = serde_json::from_str::<ClassifierSpec>(
            r#"{"family":"knn","hyperparameters":{"neighbours":3},"seed":0}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("neighbours"), "{err}");
        assert!(serde_json::from_str::<ClassifierSpec>(r#"{"family":"boosting"}"#).is_err());
    }

    #[test]
    fn discriminative_families_need_two_classes() {
        let ds = Dataset::from_rows(&[vec![0.0], vec![1.0]], vec![1, 1], None).unwrap();
        for f in [Family::LogisticRegression, Family::LinearSvm, Family::Mlp] {
            assert!(matches!(ClassifierSpec::new(f).fit(&ds), Err(Error::Training(_))), "{f}");
        }
        for f in [Family::Knn, Family::NaiveBayes, Family::Cart, Family::RandomForest] {
            let m = ClassifierSpec::new(f).fit(&ds).unwrap();
            assert_eq!(m.predict(&[0.3]).unwrap(), 1, "{f}");
        }
    }

    #[test]
    fn non_finite_training_data() {
        let ds = Dataset::from_rows(&[vec![f64::INFINITY], vec![1.0]], vec![0, 1], None).unwrap();
        assert!(matches!(ClassifierSpec::new(Family::Knn).fit(&ds), Err(Error::Argument(_))));
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let ds = Dataset::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]], vec![0, 1], None).unwrap();
        for f in Family::ALL {
            let m = ClassifierSpec::new(f).fit(&ds).unwrap();
            assert!(m.score(&[1.0]).is_err(), "{f}");
            assert!(m.predict(&[1.0, 2.0, 3.0]).is_err(), "{f}");
        }
    }
}
