use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use stackga_cli::config::{self, Overrides};
use stackga_cli::error::CliError;
use stackga_cli::pipeline::downstream_accuracy;
use stackga_cli::report::pct;
use stackga_cli::{importance, load_dataset, matrix, run, write_report, Report, Result};
use stackga_core::filter::{fcbf_with_bins, relief_with, FilterMethod, ReliefOptions, ReliefSelection};
use stackga_core::{ClassifierSpec, SplitPlan};

#[derive(Parser)]
#[command(name = "stackga", version, about = "Filter, genetic-wrapper and stacked feature selection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every pipeline stage under the configured split.
    Run(ExperimentArgs),
    /// Run every stage under every configured split plan.
    Matrix(ExperimentArgs),
    /// Rank a dataset's features with a filter and print JSON.
    Filter(FilterArgs),
    /// Selection frequency of each feature over repeated searches.
    Importance {
        #[command(flatten)]
        common: ExperimentArgs,
        /// Number of seeded searches (defaults to the config's value).
        #[arg(long)]
        runs: Option<usize>,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    config: PathBuf,
    /// Master seed; every seed not fixed in the config derives from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Re-run feature selection inside every outer training partition.
    #[arg(long)]
    nested: bool,
    /// Feed thresholded labels rather than scores to meta-learners.
    #[arg(long)]
    hard_labels: bool,
    /// Override a config key, e.g. `--set ga.population_size=20`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct FilterArgs {
    #[arg(value_parser = ["relief", "fcbf"])]
    method: String,
    data: PathBuf,
    /// FCBF relevance threshold.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Equal-frequency bins for continuous features (FCBF).
    #[arg(long, default_value_t = 10)]
    bins: usize,
    /// ReliefF neighbours.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// ReliefF sampled records (default: every record).
    #[arg(long)]
    iterations: Option<usize>,
    /// Keep the top Q ReliefF features instead of all positive ones.
    #[arg(long)]
    top: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Classifier scored on the selected features.
    #[arg(long, default_value = "cart")]
    downstream: String,
    /// Split used for the downstream score.
    #[arg(long, default_value = "k10")]
    split: String,
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(0) => Err(CliError::Config("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Output(format!("cannot start thread pool: {e}")))?
            .install(f),
    }
}

fn experiment(args: &ExperimentArgs, command: &str, runs: Option<usize>) -> Result<()> {
    let started = Instant::now();
    let ov = Overrides {
        seed: args.seed,
        out: args.out.clone(),
        nested: args.nested,
        hard_labels: args.hard_labels,
        set: args.set.clone(),
    };
    let cfg = config::load(&args.config, &ov)?;
    let ds = load_dataset(&cfg.dataset)?;
    let report: Report = with_threads(args.threads, || match command {
        "run" => run(&cfg, &ds),
        "matrix" => matrix(&cfg, &ds),
        _ => importance(&cfg, &ds, runs.unwrap_or(cfg.importance.runs)),
    })?;
    let dir = write_report(&cfg, command, args.threads, &report, started)?;
    print!("{}", report.table.text);
    eprintln!("wrote {}", dir.display());
    Ok(())
}

fn filter(args: &FilterArgs) -> Result<()> {
    let ds = load_dataset(&args.data)?;
    let downstream: ClassifierSpec = args
        .downstream
        .parse()
        .map(ClassifierSpec::new)
        .map_err(|e: stackga_core::Error| CliError::Config(format!("--downstream: {e}")))?;
    let plan = SplitPlan::new(args.split.parse().map_err(|e: stackga_core::Error| CliError::Config(format!("--split: {e}")))?, args.seed);
    let method: FilterMethod = if args.method == "relief" { FilterMethod::Relief } else { FilterMethod::Fcbf };
    let stage = method.to_string();
    let result = match method {
        FilterMethod::Fcbf => fcbf_with_bins(&ds, args.delta, args.bins),
        FilterMethod::Relief => relief_with(
            &ds,
            &ReliefOptions {
                iterations: args.iterations,
                k: args.k,
                seed: args.seed,
                selection: args.top.map_or(ReliefSelection::Positive, ReliefSelection::Top),
            },
        ),
    }
    .map_err(CliError::runtime(&stage))?;
    let eval = downstream_accuracy(&ds, &result.mask, &downstream, &plan).map_err(CliError::runtime(&stage))?;
    let mut out = result.to_json();
    out["names"] = json!(result.selected().iter().map(|&j| &ds.specs()[j].name).collect::<Vec<_>>());
    out["downstream"] = json!({
        "learner": downstream.family.short_name(),
        "plan": plan.kind.to_string(),
        "accuracy": pct(eval.report.accuracy, 2),
    });
    if let Some(w) = &result.warning {
        eprintln!("warning: {w}");
    }
    println!("{}", serde_json::to_string_pretty(&out).expect("filter output serializes"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(a) => experiment(a, "run", None),
        Command::Matrix(a) => experiment(a, "matrix", None),
        Command::Importance { common, runs } => experiment(common, "importance", *runs),
        Command::Filter(a) => filter(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
