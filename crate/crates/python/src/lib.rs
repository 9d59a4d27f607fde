//! Python bindings. Structured arguments and results cross the boundary as
//! plain dicts and lists.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use stackga_core::data::{fit_scaler, generic_specs, read_dataset, Scaler};
use stackga_core::filter::{fcbf_with_bins, relief_with, ReliefOptions, ReliefSelection};
use stackga_core::learners::{ClassifierSpec, Learner, Predictor, TrainedModel};
use stackga_core::stacking::{fit_stack, stacked_ga as run_stacked_ga, StackSpec, StackedModel};
use stackga_core::{evaluate as run_evaluate, evolve as run_evolve, Error, FeatureMask, GAConfig, SplitPlan};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        Error::Training(_) | Error::EmptySelection(_) | Error::Leakage { .. } => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn from_py<T: DeserializeOwned>(py: Python<'_>, obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = py.import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A learner given as a family name (`"nb"`) or a dict with `family`,
/// `hyperparameters` and `seed`.
fn learner_arg(py: Python<'_>, obj: &Bound<'_, PyAny>) -> PyResult<ClassifierSpec> {
    if let Ok(name) = obj.extract::<String>() {
        return name.parse().map(ClassifierSpec::new).map_err(py_err);
    }
    let spec: ClassifierSpec = from_py(py, obj)?;
    spec.validate().map_err(py_err)?;
    Ok(spec)
}

fn stack_arg(py: Python<'_>, obj: Option<&Bound<'_, PyAny>>, seed: u64) -> PyResult<StackSpec> {
    match obj {
        Some(o) => from_py(py, o),
        None => Ok(StackSpec::default_roster(seed)),
    }
}

fn ga_arg(py: Python<'_>, obj: Option<&Bound<'_, PyAny>>) -> PyResult<GAConfig> {
    let cfg: GAConfig = match obj {
        Some(o) => from_py(py, o)?,
        None => GAConfig::default(),
    };
    cfg.validate().map_err(py_err)?;
    Ok(cfg)
}

fn plan_arg(split: &str, seed: u64) -> PyResult<SplitPlan> {
    Ok(SplitPlan::new(split.parse().map_err(py_err)?, seed))
}

#[pyclass(frozen, name = "Dataset")]
struct PyDataset {
    inner: stackga_core::Dataset,
}

#[pymethods]
impl PyDataset {
    /// Builds a dataset from numeric rows and 0/1 labels.
    #[new]
    #[pyo3(signature = (rows, labels, names=None))]
    fn new(rows: Vec<Vec<f64>>, labels: Vec<u8>, names: Option<Vec<String>>) -> PyResult<Self> {
        let n = rows.first().map_or(0, Vec::len);
        let mut specs = generic_specs(n);
        if let Some(names) = names {
            if names.len() != n {
                return Err(PyValueError::new_err(format!("{} names for {n} features", names.len())));
            }
            for (s, name) in specs.iter_mut().zip(names) {
                s.name = name;
            }
        }
        let inner = stackga_core::Dataset::from_rows(&rows, labels, Some(specs)).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.specs().iter().map(|s| s.name.clone()).collect()
    }

    #[getter]
    fn labels(&self) -> Vec<u8> {
        self.inner.labels().to_vec()
    }

    fn row(&self, i: usize) -> PyResult<Vec<f64>> {
        if i >= self.inner.m() {
            return Err(PyValueError::new_err(format!("row {i} out of range for {} records", self.inner.m())));
        }
        Ok(self.inner.row(i).to_vec())
    }

    fn __len__(&self) -> usize {
        self.inner.m()
    }

    fn __repr__(&self) -> String {
        format!("Dataset(m={}, n={})", self.inner.m(), self.inner.n())
    }
}

enum Fitted {
    Single(TrainedModel),
    Stack(StackedModel),
}

/// A fitted classifier or stack that accepts full-width raw rows.
#[pyclass(frozen, name = "Model")]
struct PyModel {
    mask: FeatureMask,
    scaler: Scaler,
    fitted: Fitted,
    description: String,
}

impl PyModel {
    fn score_row(&self, row: &[f64]) -> stackga_core::Result<f64> {
        let x = self.scaler.transform_row(&self.mask.project(row)?)?;
        match &self.fitted {
            Fitted::Single(m) => m.score(&x),
            Fitted::Stack(m) => m.score(&x),
        }
    }
}

#[pymethods]
impl PyModel {
    /// Positive-class score in [0, 1].
    fn score(&self, row: Vec<f64>) -> PyResult<f64> {
        self.score_row(&row).map_err(py_err)
    }

    fn predict(&self, row: Vec<f64>) -> PyResult<u8> {
        Ok(u8::from(self.score_row(&row).map_err(py_err)? >= 0.5))
    }

    /// First-level scores fed to the meta-learner (stacks only).
    fn meta_row(&self, row: Vec<f64>) -> PyResult<Vec<f64>> {
        match &self.fitted {
            Fitted::Stack(m) => {
                let x = self.scaler.transform_row(&self.mask.project(&row).map_err(py_err)?).map_err(py_err)?;
                m.meta_row(&x).map_err(py_err)
            }
            Fitted::Single(_) => Err(PyValueError::new_err("not a stacked model")),
        }
    }

    #[getter]
    fn selected(&self) -> Vec<usize> {
        self.mask.indices()
    }

    fn __repr__(&self) -> String {
        format!("Model({}, {} of {} features)", self.description, self.mask.count(), self.mask.len())
    }
}

fn fitted_on(ds: &stackga_core::Dataset, mask: FeatureMask, fit: impl FnOnce(&stackga_core::Dataset) -> stackga_core::Result<Fitted>) -> PyResult<(FeatureMask, Scaler, Fitted)> {
    let masked = stackga_core::data::apply_mask(ds, &mask).map_err(py_err)?;
    let scaler = fit_scaler(&masked);
    let fitted = fit(&scaler.apply(&masked).map_err(py_err)?).map_err(py_err)?;
    Ok((mask, scaler, fitted))
}

#[pyfunction]
fn load_dataset(path: PathBuf) -> PyResult<PyDataset> {
    Ok(PyDataset { inner: read_dataset(path).map_err(py_err)? })
}

/// Held-out metrics of a learner under a split such as `"k10"` or `"holdout:0.8"`.
#[pyfunction]
#[pyo3(signature = (dataset, learner, split="k10", seed=0))]
fn evaluate<'py>(py: Python<'py>, dataset: &PyDataset, learner: &Bound<'py, PyAny>, split: &str, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let spec = learner_arg(py, learner)?;
    let e = run_evaluate(&spec, &dataset.inner, &plan_arg(split, seed)?).map_err(py_err)?;
    to_py(py, &e.report)
}

/// Fits one classifier on the whole dataset.
#[pyfunction]
fn fit(py: Python<'_>, dataset: &PyDataset, learner: &Bound<'_, PyAny>) -> PyResult<PyModel> {
    let spec = learner_arg(py, learner)?;
    let (mask, scaler, fitted) = fitted_on(&dataset.inner, FeatureMask::full(dataset.inner.n()), |d| Ok(Fitted::Single(spec.fit(d)?)))?;
    Ok(PyModel { mask, scaler, fitted, description: Learner::describe(&spec) })
}

#[pyfunction]
#[pyo3(signature = (dataset, delta=0.0, bins=10))]
fn fcbf<'py>(py: Python<'py>, dataset: &PyDataset, delta: f64, bins: usize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &fcbf_with_bins(&dataset.inner, delta, bins).map_err(py_err)?.to_json())
}

#[pyfunction]
#[pyo3(signature = (dataset, k=10, seed=0, iterations=None, top=None))]
fn relief<'py>(py: Python<'py>, dataset: &PyDataset, k: usize, seed: u64, iterations: Option<usize>, top: Option<usize>) -> PyResult<Bound<'py, PyAny>> {
    let opts = ReliefOptions { iterations, k, seed, selection: top.map_or(ReliefSelection::Positive, ReliefSelection::Top) };
    to_py(py, &relief_with(&dataset.inner, &opts).map_err(py_err)?.to_json())
}

/// Genetic feature search wrapped around one learner.
#[pyfunction]
#[pyo3(signature = (dataset, learner, ga=None))]
fn evolve<'py>(py: Python<'py>, dataset: &PyDataset, learner: &Bound<'py, PyAny>, ga: Option<&Bound<'py, PyAny>>) -> PyResult<Bound<'py, PyAny>> {
    let spec = learner_arg(py, learner)?;
    let cfg = ga_arg(py, ga)?;
    let result = run_evolve(&cfg, &spec, &dataset.inner).map_err(py_err)?;
    to_py(py, &result)
}

/// Fits a stack; without `stack` the seven-family default roster is used.
#[pyfunction]
#[pyo3(signature = (dataset, stack=None, seed=0))]
fn fit_stacked(py: Python<'_>, dataset: &PyDataset, stack: Option<&Bound<'_, PyAny>>, seed: u64) -> PyResult<PyModel> {
    let spec = stack_arg(py, stack, seed)?;
    let (mask, scaler, fitted) = fitted_on(&dataset.inner, FeatureMask::full(dataset.inner.n()), |d| Ok(Fitted::Stack(fit_stack(&spec, d)?)))?;
    Ok(PyModel { mask, scaler, fitted, description: spec.describe() })
}

/// Genetic search of one feature subset shared by a whole stack. Returns
/// the search summary and the stack refitted on the chosen subset.
#[pyfunction]
#[pyo3(signature = (dataset, stack=None, ga=None, seed=0))]
fn stacked_ga<'py>(
    py: Python<'py>,
    dataset: &PyDataset,
    stack: Option<&Bound<'py, PyAny>>,
    ga: Option<&Bound<'py, PyAny>>,
    seed: u64,
) -> PyResult<(Bound<'py, PyAny>, PyModel)> {
    let spec = stack_arg(py, stack, seed)?;
    let cfg = ga_arg(py, ga)?;
    let (result, selected) = run_stacked_ga(&spec, &cfg, &dataset.inner).map_err(py_err)?;
    let model = PyModel {
        mask: selected.mask,
        scaler: selected.scaler,
        fitted: Fitted::Stack(selected.model),
        description: spec.describe(),
    };
    Ok((to_py(py, &result)?, model))
}

/// Runs an experiment config like the `stackga` command and returns the
/// text table; outputs are written as the CLI would.
#[pyfunction]
#[pyo3(signature = (config, command="run", seed=None, out=None, nested=false))]
fn run_experiment(config: PathBuf, command: &str, seed: Option<u64>, out: Option<PathBuf>, nested: bool) -> PyResult<String> {
    use stackga_cli::config::{load, Overrides};
    let started = std::time::Instant::now();
    let cli_err = |e: stackga_cli::error::CliError| match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    };
    let cfg = load(&config, &Overrides { seed, out, nested, ..Default::default() }).map_err(cli_err)?;
    let ds = stackga_cli::load_dataset(&cfg.dataset).map_err(cli_err)?;
    let report = match command {
        "run" => stackga_cli::run(&cfg, &ds),
        "matrix" => stackga_cli::matrix(&cfg, &ds),
        "importance" => stackga_cli::importance(&cfg, &ds, cfg.importance.runs),
        other => return Err(PyValueError::new_err(format!("unknown command '{other}' (expected run, matrix or importance)"))),
    }
    .map_err(cli_err)?;
    stackga_cli::write_report(&cfg, command, None, &report, started).map_err(cli_err)?;
    Ok(report.table.text)
}

#[pymodule]
fn stackga(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(load_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(fcbf, m)?)?;
    m.add_function(wrap_pyfunction!(relief, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(fit_stacked, m)?)?;
    m.add_function(wrap_pyfunction!(stacked_ga, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
