//! Typed, validated hyperparameters per family.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::Value;

use super::Family;
use crate::error::{Error, Result};

struct Reader<'a> {
    family: Family,
    map: &'a BTreeMap<String, Value>,
    used: BTreeSet<&'static str>,
}

impl<'a> Reader<'a> {
    fn new(family: Family, map: &'a BTreeMap<String, Value>) -> Self {
        Self { family, map, used: BTreeSet::new() }
    }

    fn bad(&self, key: &str, want: &str) -> Error {
        Error::Config(format!(
            "{}: hyperparameter '{key}' must be {want}, got {}",
            self.family, self.map[key]
        ))
    }

    fn usize(&mut self, key: &'static str, default: usize, min: usize) -> Result<usize> {
        self.used.insert(key);
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => match v.as_u64() {
                Some(x) if x as usize >= min => Ok(x as usize),
                _ => Err(self.bad(key, &format!("an integer >= {min}"))),
            },
        }
    }

    fn opt_usize(&mut self, key: &'static str) -> Result<Option<usize>> {
        match self.map.get(key) {
            None | Some(Value::Null) => {
                self.used.insert(key);
                Ok(None)
            }
            Some(_) => self.usize(key, 0, 1).map(Some),
        }
    }

    fn f64(&mut self, key: &'static str, default: f64, positive: bool) -> Result<f64> {
        self.used.insert(key);
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => match v.as_f64() {
                Some(x) if x.is_finite() && (x > 0.0 || (!positive && x == 0.0)) => Ok(x),
                _ => Err(self.bad(key, if positive { "a positive number" } else { "a number >= 0" })),
            },
        }
    }

    fn finish(self) -> Result<()> {
        match self.map.keys().find(|k| !self.used.contains(k.as_str())) {
            Some(k) => Err(Error::Config(format!(
                "unknown hyperparameter '{k}' for {} (allowed: {})",
                self.family,
                self.used.iter().copied().collect::<Vec<_>>().join(", ")
            ))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnParams {
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayesParams {
    /// Fraction of the largest feature variance added to every variance.
    pub var_smoothing: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Candidate features per split; `None` means `ceil(sqrt(n))`.
    pub max_features: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub hidden: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Weights start uniform in `(-init_range, init_range)`.
    pub init_range: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Resolved {
    Knn(KnnParams),
    NaiveBayes(NaiveBayesParams),
    Cart(CartParams),
    Forest(ForestParams),
    Logistic(LogisticParams),
    Svm(SvmParams),
    Mlp(MlpParams),
}

impl Resolved {
    pub(crate) fn new(family: Family, map: &BTreeMap<String, Value>) -> Result<Self> {
        let mut r = Reader::new(family, map);
        let resolved = match family {
            Family::Knn => Resolved::Knn(KnnParams { k: r.usize("k", 5, 1)? }),
            Family::NaiveBayes => Resolved::NaiveBayes(NaiveBayesParams {
                var_smoothing: r.f64("var_smoothing", 1e-9, false)?,
            }),
            Family::Cart => Resolved::Cart(CartParams {
                max_depth: r.usize("max_depth", 10, 1)?,
                min_samples_leaf: r.usize("min_samples_leaf", 2, 1)?,
            }),
            Family::RandomForest => Resolved::Forest(ForestParams {
                n_trees: r.usize("n_trees", 100, 1)?,
                max_depth: r.usize("max_depth", 10, 1)?,
                min_samples_leaf: r.usize("min_samples_leaf", 1, 1)?,
                max_features: r.opt_usize("max_features")?,
            }),
            Family::LogisticRegression => Resolved::Logistic(LogisticParams {
                learning_rate: r.f64("learning_rate", 0.1, true)?,
                epochs: r.usize("epochs", 2000, 1)?,
                l2: r.f64("l2", 1e-4, false)?,
            }),
            Family::LinearSvm => Resolved::Svm(SvmParams {
                learning_rate: r.f64("learning_rate", 0.01, true)?,
                epochs: r.usize("epochs", 2000, 1)?,
                l2: r.f64("l2", 1e-3, false)?,
            }),
            Family::Mlp => Resolved::Mlp(MlpParams {
                hidden: r.usize("hidden", 16, 1)?,
                learning_rate: r.f64("learning_rate", 0.05, true)?,
                epochs: r.usize("epochs", 3000, 1)?,
                init_range: r.f64("init_range", 0.5, true)?,
            }),
        };
        r.finish()?;
        Ok(resolved)
    }
}
