//! `rebalance`: rebalance imbalanced regression data and compare models
//! fitted on the rebalanced and original training sets.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;

/// Bad configuration or input, reported with exit code 2.
#[derive(Debug)]
pub struct Validation(pub String);

impl std::fmt::Display for Validation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Validation {}

#[derive(Parser)]
#[command(name = "rebalance", version, about = "Covariate-space rebalancing for imbalanced regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON run configuration; defaults apply to missing keys
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`)
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Global seed (overrides `seed`)
    #[arg(long)]
    seed: Option<u64>,
    /// Input CSV (overrides `input.path`)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Target column for `--input` (overrides `input.ingestion.target_column`)
    #[arg(long)]
    target: Option<String>,
    /// Iterations per strategy (overrides `evaluation.iterations`)
    #[arg(long)]
    iterations: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic cluster-plus-shell dataset and its region labels
    Generate(Common),
    /// Draw one rebalanced sample per configured strategy
    Sample(Common),
    /// Fit a linear model on the training split or on a sample of it
    Fit {
        #[command(flatten)]
        common: Common,
        /// `all` for every training row, or a configured sampling strategy
        #[arg(long, default_value = "all")]
        strategy: String,
    },
    /// Score saved models on the test split
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long = "model", required = true)]
        models: Vec<PathBuf>,
    },
    /// Repeat sampling and fitting for every strategy and summarize RMSE
    Experiment(Common),
    /// Project test rows onto principal components
    Pca {
        #[command(flatten)]
        common: Common,
        /// Residual CSV of the first model to compare
        #[arg(long, requires = "residuals_b")]
        residuals_a: Option<PathBuf>,
        /// Residual CSV of the second model to compare
        #[arg(long, requires = "residuals_a")]
        residuals_b: Option<PathBuf>,
    },
}

/// Ingestion for a bare `--input/--target` pair: `row_id` and `batch`
/// columns, as written by this tool, are recognised rather than treated as
/// covariates.
fn ingestion_for(path: &std::path::Path, target: &str) -> rebalance_core::dataset::IngestionConfig {
    let mut ingestion = rebalance_core::dataset::IngestionConfig::new(target);
    let header: Vec<String> = csv::Reader::from_path(path)
        .and_then(|mut r| r.headers().map(|h| h.iter().map(|c| c.trim().to_string()).collect()))
        .unwrap_or_default();
    for (name, slot) in [("row_id", &mut ingestion.id_column), ("batch", &mut ingestion.batch_column)] {
        if name != target && header.iter().any(|h| h == name) {
            *slot = Some(name.to_string());
        }
    }
    ingestion
}

fn resolve(common: &Common) -> anyhow::Result<RunConfig> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &common.out {
        config.output_dir = out.clone();
    }
    if common.seed.is_some() {
        config.seed = common.seed;
    }
    if let Some(iterations) = common.iterations {
        config.evaluation.iterations = iterations;
    }
    if let Some(path) = &common.input {
        let mut input = config.input.take().unwrap_or(config::InputConfig {
            path: path.clone(),
            ingestion: None,
            ingestion_file: None,
        });
        input.path = path.clone();
        if let Some(target) = &common.target {
            let mut ingestion = input.ingestion.take().unwrap_or_else(|| ingestion_for(path, target));
            ingestion.target_column = target.clone();
            input.ingestion = Some(ingestion);
        }
        config.input = Some(input);
    } else if common.target.is_some() {
        let input = config.input.as_mut().ok_or_else(|| Validation("--target requires an input file".into()))?;
        let target = common.target.clone().unwrap_or_default();
        match &mut input.ingestion {
            Some(ing) => ing.target_column = target,
            None => input.ingestion = Some(rebalance_core::dataset::IngestionConfig::new(target)),
        }
    }
    config.resolve()
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Generate(common) => commands::generate(&resolve(&common)?),
        Command::Sample(common) => commands::sample(&resolve(&common)?),
        Command::Fit { common, strategy } => commands::fit(&resolve(&common)?, &strategy),
        Command::Evaluate { common, models } => commands::evaluate(&resolve(&common)?, &models),
        Command::Experiment(common) => commands::experiment(&resolve(&common)?),
        Command::Pca { common, residuals_a, residuals_b } => {
            let join = residuals_a.zip(residuals_b);
            commands::pca(&resolve(&common)?, join)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Validation>().is_some() {
        return 2;
    }
    if let Some(core) = err.downcast_ref::<rebalance_core::Error>() {
        return if core.is_validation() { 2 } else { 1 };
    }
    if err.downcast_ref::<serde_json::Error>().is_some() {
        return 2;
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = exit_code(&err);
            let kind = if code == 2 { "validation" } else { "runtime" };
            let line = serde_json::json!({ "error": { "kind": kind, "message": format!("{err:#}") } });
            eprintln!("{line}");
            ExitCode::from(code)
        }
    }
}
