//! The `stackga` experiment runner: configuration, execution and reports.

pub mod config;
pub mod error;
pub mod overrides;
pub mod pipeline;
pub mod report;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use stackga_core::data::read_dataset;
use stackga_core::ga::selection_frequency;
use stackga_core::Dataset;

use config::ResolvedConfig;
use error::CliError;
use pipeline::{Runner, StageOutcome};
use report::Table;

pub type Result<T> = std::result::Result<T, CliError>;

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    read_dataset(path).map_err(|e| CliError::Config(format!("dataset {}: {e}", path.display())))
}

/// SHA-256 of the resolved config as written to `resolved_config.json`.
pub fn config_hash(cfg: &ResolvedConfig) -> String {
    let digest = Sha256::digest(resolved_text(cfg).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn resolved_text(cfg: &ResolvedConfig) -> String {
    let mut s = serde_json::to_string_pretty(&cfg.to_json()).expect("config serializes");
    s.push('\n');
    s
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::write(dir.join(name), contents)
        .map_err(|e| CliError::Output(format!("cannot write {}: {e}", dir.join(name).display())))
}

/// What a command produced, before it is written out.
pub struct Report {
    pub table: Table,
    pub details: Value,
    pub timings: Value,
}

/// Writes the standard output files and returns the output directory.
pub fn write_report(cfg: &ResolvedConfig, command: &str, threads: Option<usize>, report: &Report, started: Instant) -> Result<PathBuf> {
    let dir = cfg.output.clone();
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Output(format!("cannot create {}: {e}", dir.display())))?;
    write(&dir, "resolved_config.json", &resolved_text(cfg))?;
    write(&dir, "table.csv", &report.table.csv)?;
    write(&dir, "table.txt", &report.table.text)?;
    let mut details = serde_json::to_string_pretty(&report.details).expect("details serialize");
    details.push('\n');
    write(&dir, "details.json", &details)?;
    let provenance = json!({
        "tool": "stackga",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config_hash": config_hash(cfg),
        "master_seed": cfg.seed,
        "threads": threads,
        "nested": cfg.nested,
        "started_unix": SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or_default(),
        "wall_clock_ms": started.elapsed().as_secs_f64() * 1e3,
        "timings_ms": report.timings,
    });
    let mut prov = serde_json::to_string_pretty(&provenance).expect("provenance serializes");
    prov.push('\n');
    write(&dir, "provenance.json", &prov)?;
    Ok(dir)
}

fn outcome_details(o: &StageOutcome) -> Value {
    json!({
        "method": o.name,
        "stage": o.kind,
        "plan": o.plan,
        "mode": o.mode(),
        "report": o.evaluation.report,
        "per_partition": o.evaluation.per_partition,
        "undefined_partitions": o.evaluation.skipped,
        "pooled_confusion": o.evaluation.pooled,
        "selection": o.details,
    })
}

fn outcome_timing(o: &StageOutcome) -> Value {
    json!({"method": o.name, "plan": o.plan, "selection_ms": o.selection_ms, "total_ms": o.total_ms})
}

/// Every stage under the config's main split.
pub fn run(cfg: &ResolvedConfig, ds: &Dataset) -> Result<Report> {
    let mut runner = Runner::new(cfg, ds);
    let outcomes = (0..cfg.pipeline.len())
        .map(|i| runner.run(i, &cfg.split))
        .collect::<Result<Vec<_>>>()?;
    Ok(Report {
        table: report::run_table(&outcomes, ds),
        details: Value::Array(outcomes.iter().map(outcome_details).collect()),
        timings: Value::Array(outcomes.iter().map(outcome_timing).collect()),
    })
}

/// Every stage under every plan.
pub fn matrix(cfg: &ResolvedConfig, ds: &Dataset) -> Result<Report> {
    let mut runner = Runner::new(cfg, ds);
    let mut grid = Vec::new();
    for i in 0..cfg.pipeline.len() {
        grid.push(cfg.plans.iter().map(|p| runner.run(i, p)).collect::<Result<Vec<_>>>()?);
    }
    let plans: Vec<String> = cfg.plans.iter().map(|p| p.kind.to_string()).collect();
    Ok(Report {
        table: report::matrix_table(&grid, &plans, &cfg.references),
        details: Value::Array(grid.iter().flatten().map(outcome_details).collect()),
        timings: Value::Array(grid.iter().flatten().map(outcome_timing).collect()),
    })
}

/// Selection frequencies over repeated searches of one stage.
pub fn importance(cfg: &ResolvedConfig, ds: &Dataset, runs: usize) -> Result<Report> {
    if runs == 0 {
        return Err(CliError::Config("--runs must be at least 1".into()));
    }
    let stage = cfg.importance_stage()?;
    let start = Instant::now();
    let results = pipeline::importance_runs(stage, ds, runs)?;
    let frequency = selection_frequency(&results).map_err(CliError::runtime(stage.name()))?;
    let mut table = report::importance_table(&frequency, ds, &cfg.importance.highlight, runs);
    table.text = format!("Stage '{}' ({})\n\n{}", stage.name(), stage.kind(), table.text);
    let runs_detail: Vec<Value> = results
        .iter()
        .map(|r| json!({"best_mask": r.best_mask.indices(), "best_fitness": r.best_fitness, "best_accuracy": r.best_accuracy}))
        .collect();
    Ok(Report {
        table,
        details: json!({"stage": stage.name(), "runs": runs_detail, "frequency": frequency}),
        timings: json!({"total_ms": start.elapsed().as_secs_f64() * 1e3}),
    })
}
