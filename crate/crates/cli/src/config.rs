//! Experiment configuration: the JSON document users write, and its fully
//! resolved form in which every seed and hyperparameter is explicit.
//!
//! Seeds not given explicitly derive from the master seed along fixed
//! paths, so a resolved config fed back in resolves to itself.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use stackga_core::filter::{FilterMethod, ReliefSelection};
use stackga_core::learners::{ClassifierSpec, Family};
use stackga_core::rng::derive_seed;
use stackga_core::stacking::{MetaMode, StackSpec};
use stackga_core::{GAConfig, SplitKind, SplitPlan};

use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn config_err(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{path}: {msg}"))
}

fn parse<T: serde::de::DeserializeOwned>(path: &str, v: Value) -> Result<T> {
    serde_json::from_value(v).map_err(|e| config_err(path, e))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dataset: PathBuf,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    output: Option<PathBuf>,
    #[serde(default)]
    split: Option<Value>,
    #[serde(default)]
    plans: Option<Vec<Value>>,
    /// Per-family hyperparameters applied wherever that family is named.
    #[serde(default)]
    hyperparameters: BTreeMap<String, Map<String, Value>>,
    #[serde(default)]
    ga: Option<Map<String, Value>>,
    #[serde(default)]
    stack: Option<Value>,
    #[serde(default)]
    nested: bool,
    #[serde(default)]
    hard_labels: bool,
    pipeline: Vec<Value>,
    #[serde(default)]
    importance: Option<Value>,
    #[serde(default)]
    references: BTreeMap<String, Reference>,
}

/// A published figure shown next to a method's result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reference {
    /// Split label the figure refers to, e.g. `k10`.
    pub plan: String,
    /// Accuracy in percent.
    pub accuracy: f64,
    #[serde(default)]
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Importance {
    pub runs: usize,
    /// Name of the feature-searching stage to repeat; defaults to the first
    /// `stacked_ga` stage, then the first `ga` stage.
    #[serde(default)]
    pub stage: Option<String>,
    /// Features whose standing is reported explicitly.
    pub highlight: Vec<String>,
}

impl Default for Importance {
    fn default() -> Self {
        Self { runs: 30, stage: None, highlight: vec!["thal".into(), "ca".into()] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum Stage {
    Classifier {
        name: String,
        learner: ClassifierSpec,
    },
    Ga {
        name: String,
        learner: ClassifierSpec,
        ga: GAConfig,
    },
    Stack {
        name: String,
        stack: StackSpec,
    },
    StackedGa {
        name: String,
        stack: StackSpec,
        ga: GAConfig,
    },
    Filter {
        name: String,
        method: FilterMethod,
        delta: f64,
        bins: usize,
        k: usize,
        iterations: Option<usize>,
        selection: ReliefSelection,
        seed: u64,
        downstream: ClassifierSpec,
    },
}

impl Stage {
    pub fn name(&self) -> &str {
        match self {
            Stage::Classifier { name, .. }
            | Stage::Ga { name, .. }
            | Stage::Stack { name, .. }
            | Stage::StackedGa { name, .. }
            | Stage::Filter { name, .. } => name,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Stage::Classifier { .. } => "classifier",
            Stage::Ga { .. } => "ga",
            Stage::Stack { .. } => "stack",
            Stage::StackedGa { .. } => "stacked_ga",
            Stage::Filter { .. } => "filter",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub dataset: PathBuf,
    pub seed: u64,
    pub output: PathBuf,
    pub split: SplitPlan,
    pub plans: Vec<SplitPlan>,
    pub nested: bool,
    pub pipeline: Vec<Stage>,
    pub importance: Importance,
    pub references: BTreeMap<String, Reference>,
}

/// Command-line settings that override the document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub nested: bool,
    pub hard_labels: bool,
    /// `dotted.path=value` assignments applied to the raw JSON.
    pub set: Vec<String>,
}

/// Reads, patches and resolves a config file. Relative dataset paths are
/// taken relative to the config file's directory.
pub fn load(path: &Path, ov: &Overrides) -> Result<ResolvedConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut doc: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: invalid JSON: {e}", path.display())))?;
    for assignment in &ov.set {
        crate::overrides::apply(&mut doc, assignment)?;
    }
    let base = path.parent().unwrap_or(Path::new("."));
    let default_out = PathBuf::from("runs").join(path.file_stem().unwrap_or_default());
    resolve(doc, base, default_out, ov)
}

pub fn resolve(doc: Value, base: &Path, default_out: PathBuf, ov: &Overrides) -> Result<ResolvedConfig> {
    let raw: RawConfig = parse("config", doc)?;
    let seed = ov.seed.unwrap_or(raw.seed);
    let r = Resolver { seed, hyper: &raw.hyperparameters, ga: raw.ga.as_ref(), stack: raw.stack.as_ref(), hard: ov.hard_labels || raw.hard_labels };
    r.check_hyperparameters()?;

    let split_seed = derive_seed(seed, &[1]);
    let split = match raw.split {
        Some(v) => split_plan("split", v, split_seed)?,
        None => SplitPlan::new(SplitKind::kfold(10), split_seed),
    };
    let plans = match raw.plans {
        Some(list) => list
            .into_iter()
            .enumerate()
            .map(|(i, v)| split_plan(&format!("plans[{i}]"), v, split_seed))
            .collect::<Result<_>>()?,
        None => ["holdout", "k2", "k5", "k10"]
            .iter()
            .map(|s| SplitPlan::new(s.parse().expect("built-in split label"), split_seed))
            .collect(),
    };
    if raw.pipeline.is_empty() {
        return Err(CliError::Config("pipeline: at least one stage is required".into()));
    }
    let pipeline = raw
        .pipeline
        .into_iter()
        .enumerate()
        .map(|(i, v)| r.stage(i, v))
        .collect::<Result<Vec<_>>>()?;
    let importance = match raw.importance {
        Some(v) => {
            let mut obj = as_object("importance", v)?;
            let d = Importance::default();
            obj.entry("runs").or_insert(d.runs.into());
            obj.entry("highlight").or_insert(serde_json::json!(d.highlight));
            parse("importance", Value::Object(obj))?
        }
        None => Importance::default(),
    };
    let dataset = if raw.dataset.is_absolute() { raw.dataset } else { base.join(raw.dataset) };
    let dataset = std::fs::canonicalize(&dataset).unwrap_or(dataset);
    let output = ov.out.clone().or(raw.output).unwrap_or(default_out);
    Ok(ResolvedConfig {
        dataset,
        seed,
        output,
        split,
        plans,
        nested: ov.nested || raw.nested,
        pipeline,
        importance,
        references: raw.references,
    })
}

fn as_object(path: &str, v: Value) -> Result<Map<String, Value>> {
    match v {
        Value::Object(m) => Ok(m),
        other => Err(config_err(path, format!("expected an object, found {other}"))),
    }
}

/// `"k10"`-style label or `{"kind": ..., "seed": ...}` object.
fn split_plan(path: &str, v: Value, default_seed: u64) -> Result<SplitPlan> {
    let plan = match v {
        Value::String(s) => SplitPlan::new(s.parse().map_err(|e| config_err(path, e))?, default_seed),
        Value::Object(mut obj) => {
            obj.entry("seed").or_insert(default_seed.into());
            parse(path, Value::Object(obj))?
        }
        other => return Err(config_err(path, format!("expected a split label or object, found {other}"))),
    };
    if let SplitKind::Holdout { fraction, .. } = plan.kind {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(config_err(path, format!("holdout fraction {fraction} must lie in (0, 1)")));
        }
    }
    if let SplitKind::Kfold { k, .. } = plan.kind {
        if k < 2 {
            return Err(config_err(path, format!("k = {k} must be at least 2")));
        }
    }
    Ok(plan)
}

struct Resolver<'a> {
    seed: u64,
    hyper: &'a BTreeMap<String, Map<String, Value>>,
    ga: Option<&'a Map<String, Value>>,
    stack: Option<&'a Value>,
    hard: bool,
}

impl Resolver<'_> {
    fn check_hyperparameters(&self) -> Result<()> {
        for (family, params) in self.hyper {
            let f: Family = family.parse().map_err(|e| config_err("hyperparameters", e))?;
            let mut spec = ClassifierSpec::new(f);
            spec.hyperparameters = params.clone().into_iter().collect();
            spec.validate().map_err(|e| config_err(&format!("hyperparameters.{family}"), e))?;
        }
        Ok(())
    }

    fn family_defaults(&self, f: Family) -> BTreeMap<String, Value> {
        self.hyper
            .iter()
            .filter(|(k, _)| k.parse::<Family>().ok() == Some(f))
            .flat_map(|(_, m)| m.clone())
            .collect()
    }

    /// A family name or a `{"family", "hyperparameters", "seed"}` object.
    fn learner(&self, path: &str, v: Value, seed: u64) -> Result<ClassifierSpec> {
        let mut obj = match v {
            Value::String(s) => {
                let mut m = Map::new();
                m.insert("family".into(), Value::String(s));
                m
            }
            other => as_object(path, other)?,
        };
        let family = obj
            .get("family")
            .and_then(Value::as_str)
            .ok_or_else(|| config_err(path, "missing string key 'family'"))?;
        let f: Family = family.parse().map_err(|e| config_err(&format!("{path}.family"), e))?;
        let mut params = self.family_defaults(f);
        if let Some(explicit) = obj.remove("hyperparameters") {
            params.extend(as_object(&format!("{path}.hyperparameters"), explicit)?);
        }
        obj.insert("hyperparameters".into(), Value::Object(params.into_iter().collect()));
        obj.entry("seed").or_insert(seed.into());
        parse(path, Value::Object(obj))
    }

    fn ga(&self, path: &str, stage: Option<Value>, seed: u64) -> Result<GAConfig> {
        let mut obj = self.ga.cloned().unwrap_or_default();
        obj.remove("seed");
        if let Some(v) = stage {
            obj.extend(as_object(path, v)?);
        }
        obj.entry("seed").or_insert(seed.into());
        let cfg: GAConfig = parse(path, Value::Object(obj))?;
        cfg.validate().map_err(|e| config_err(path, e))?;
        Ok(cfg)
    }

    fn stack(&self, path: &str, stage: Option<Value>, seed: u64) -> Result<StackSpec> {
        let mut obj = match self.stack {
            Some(v) => as_object("stack", v.clone())?,
            None => Map::new(),
        };
        if let Some(v) = stage {
            obj.extend(as_object(path, v)?);
        }
        let first: Vec<Value> = match obj.remove("first_level") {
            Some(Value::Array(items)) => items,
            Some(other) => return Err(config_err(&format!("{path}.first_level"), format!("expected a list, found {other}"))),
            None => Family::ALL.iter().map(|f| Value::String(f.short_name().into())).collect(),
        };
        let t = first.len();
        let first_level = first
            .into_iter()
            .enumerate()
            .map(|(i, v)| self.learner(&format!("{path}.first_level[{i}]"), v, derive_seed(seed, &[i as u64])))
            .collect::<Result<Vec<_>>>()?;
        let meta = obj.remove("meta_learner").unwrap_or(Value::String("lr".into()));
        let meta_learner = self.learner(&format!("{path}.meta_learner"), meta, derive_seed(seed, &[t as u64]))?;
        let meta_mode: MetaMode = match obj.remove("meta_mode") {
            Some(v) => parse(&format!("{path}.meta_mode"), v)?,
            None => MetaMode::OutOfFold(5),
        };
        let hard_labels = match obj.remove("hard_labels") {
            Some(v) => parse(&format!("{path}.hard_labels"), v)?,
            None => false,
        } || self.hard;
        if let Some(key) = obj.keys().next() {
            return Err(config_err(path, format!("unknown field `{key}`")));
        }
        let mut spec = StackSpec::new(first_level, meta_learner, meta_mode).map_err(|e| config_err(path, e))?;
        spec.hard_labels = hard_labels;
        Ok(spec)
    }

    fn stage(&self, i: usize, v: Value) -> Result<Stage> {
        let path = format!("pipeline[{i}]");
        let mut obj = as_object(&path, v)?;
        let kind = obj
            .remove("stage")
            .and_then(|s| s.as_str().map(str::to_owned))
            .ok_or_else(|| config_err(&path, "missing string key 'stage'"))?;
        let base = derive_seed(self.seed, &[2, i as u64]);
        let name = obj.remove("name").map(|n| parse::<String>(&format!("{path}.name"), n)).transpose()?;
        let take = |obj: &mut Map<String, Value>, key: &str| obj.remove(key);
        let learner_at = |obj: &mut Map<String, Value>| -> Result<ClassifierSpec> {
            let v = take(obj, "learner").ok_or_else(|| config_err(&path, "missing key 'learner'"))?;
            self.learner(&format!("{path}.learner"), v, derive_seed(base, &[0]))
        };
        let stage = match kind.as_str() {
            "classifier" => {
                let learner = learner_at(&mut obj)?;
                Stage::Classifier { name: name.unwrap_or_else(|| learner.family.short_name().into()), learner }
            }
            "ga" => {
                let learner = learner_at(&mut obj)?;
                let ga = self.ga(&format!("{path}.ga"), take(&mut obj, "ga"), derive_seed(base, &[1]))?;
                Stage::Ga { name: name.unwrap_or_else(|| format!("ga_{}", learner.family.short_name())), learner, ga }
            }
            "stack" => {
                let stack = self.stack(&format!("{path}.stack"), take(&mut obj, "stack"), derive_seed(base, &[2]))?;
                Stage::Stack { name: name.unwrap_or_else(|| "stack".into()), stack }
            }
            "stacked_ga" => {
                let stack = self.stack(&format!("{path}.stack"), take(&mut obj, "stack"), derive_seed(base, &[2]))?;
                let ga = self.ga(&format!("{path}.ga"), take(&mut obj, "ga"), derive_seed(base, &[1]))?;
                Stage::StackedGa { name: name.unwrap_or_else(|| "stacked_ga".into()), stack, ga }
            }
            "filter" => {
                let method: FilterMethod = parse(
                    &format!("{path}.method"),
                    take(&mut obj, "method").ok_or_else(|| config_err(&path, "missing key 'method'"))?,
                )?;
                let get = |obj: &mut Map<String, Value>, key: &str, default: Value| -> Value {
                    obj.remove(key).unwrap_or(default)
                };
                let delta: f64 = parse(&format!("{path}.delta"), get(&mut obj, "delta", 0.0.into()))?;
                let bins: usize = parse(&format!("{path}.bins"), get(&mut obj, "bins", 10.into()))?;
                let k: usize = parse(&format!("{path}.k"), get(&mut obj, "k", 10.into()))?;
                let iterations = parse(&format!("{path}.iterations"), get(&mut obj, "iterations", Value::Null))?;
                let selection = parse(&format!("{path}.selection"), get(&mut obj, "selection", "positive".into()))?;
                let seed: u64 = parse(&format!("{path}.seed"), get(&mut obj, "seed", derive_seed(base, &[3]).into()))?;
                let downstream_v = get(&mut obj, "downstream", "cart".into());
                let downstream = self.learner(&format!("{path}.downstream"), downstream_v, derive_seed(base, &[0]))?;
                if !(delta >= 0.0) || bins < 2 || k < 1 {
                    return Err(config_err(&path, "filter needs delta >= 0, bins >= 2 and k >= 1"));
                }
                Stage::Filter { name: name.unwrap_or_else(|| method.to_string()), method, delta, bins, k, iterations, selection, seed, downstream }
            }
            other => {
                return Err(config_err(
                    &format!("{path}.stage"),
                    format!("unknown stage '{other}' (expected classifier, ga, stack, stacked_ga or filter)"),
                ))
            }
        };
        if let Some(key) = obj.keys().next() {
            return Err(config_err(&path, format!("unknown field `{key}` for stage '{kind}'")));
        }
        Ok(stage)
    }
}

impl ResolvedConfig {
    /// The resolved config in the input schema, loadable by [`resolve`].
    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "dataset": self.dataset,
            "seed": self.seed,
            "output": self.output,
            "split": self.split,
            "plans": self.plans,
            "nested": self.nested,
            "pipeline": self.pipeline,
            "importance": self.importance,
            "references": self.references,
        })
    }

    /// Stage whose feature search `importance` repeats.
    pub fn importance_stage(&self) -> Result<&Stage> {
        let searching = |s: &&Stage| matches!(s, Stage::Ga { .. } | Stage::StackedGa { .. });
        match &self.importance.stage {
            Some(name) => self
                .pipeline
                .iter()
                .find(|s| s.name() == name)
                .filter(searching)
                .ok_or_else(|| config_err("importance.stage", format!("no ga or stacked_ga stage named '{name}'"))),
            None => self
                .pipeline
                .iter()
                .find(|s| matches!(s, Stage::StackedGa { .. }))
                .or_else(|| self.pipeline.iter().find(searching))
                .ok_or_else(|| config_err("importance", "the pipeline has no ga or stacked_ga stage")),
        }
    }
}
