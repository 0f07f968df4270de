use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use rebalance_core::dataset::{
    filter_columns, fit_standardization, load_csv, train_test_split, write_csv_to, FilterReport, IngestionConfig,
    StandardizationParams,
};
use rebalance_core::evaluation::{
    evaluate as score, run_experiment, run_resplit_experiment, winner_map, write_residuals_csv, PreparedSplit, Winner,
    BASELINE_LABEL,
};
use rebalance_core::neighbors::DensityScore;
use rebalance_core::pca::{fit_pca, FittedOn};
use rebalance_core::regression::{fit_ols_with, LinearModel};
use rebalance_core::sampling::{Sampler, SamplingPlan, Strategy};
use rebalance_core::synth::generate as synthesize;
use rebalance_core::{Dataset, RowId};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::OutputDir;
use crate::Validation;

/// The dataset named by the config, after dropping unusable columns.
struct Prepared {
    dataset: Dataset,
    filter: FilterReport,
}

fn load(config: &RunConfig) -> Result<Prepared> {
    let raw = match &config.input {
        Some(input) => {
            let ingestion = input.ingestion.as_ref().expect("resolved config carries ingestion");
            load_csv(&input.path, ingestion)?
        }
        None => synthesize(&config.synthetic)?.dataset,
    };
    let (dataset, filter) = filter_columns(&raw)?;
    Ok(Prepared { dataset, filter })
}

fn split(config: &RunConfig, dataset: &Dataset) -> Result<(Dataset, Dataset)> {
    Ok(train_test_split(dataset, &config.split)?)
}

fn search_space(config: &RunConfig, dataset: &Dataset) -> Result<StandardizationParams> {
    Ok(if config.evaluation.standardize {
        fit_standardization(dataset)?
    } else {
        StandardizationParams::identity(dataset.p())
    })
}

fn plan_for(config: &RunConfig, label: &str) -> Result<SamplingPlan> {
    let strategy = Strategy::parse(label).ok_or_else(|| Validation(format!("unknown strategy `{label}`")))?;
    Ok(config
        .plans()
        .iter()
        .find(|p| p.strategy == strategy)
        .copied()
        .unwrap_or_else(|| SamplingPlan::new(strategy, config.evaluation.base_seed)))
}

fn write_scores<W: Write>(scores: &[DensityScore], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["row_id", "mean_knn_distance"])?;
    for s in scores {
        wtr.write_record([s.row_id.to_string(), s.mean_knn_distance.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct DataDetails<'a> {
    n: usize,
    p: usize,
    feature_names: &'a [String],
    target: &'a str,
    filter: &'a FilterReport,
}

impl<'a> DataDetails<'a> {
    fn of(prepared: &'a Prepared) -> Self {
        let d = &prepared.dataset;
        DataDetails { n: d.n(), p: d.p(), feature_names: d.feature_names(), target: d.target_name(), filter: &prepared.filter }
    }
}

pub fn generate(config: &RunConfig) -> Result<()> {
    if config.input.is_some() {
        return Err(Validation("generate writes synthetic data; remove `input` from the config".into()).into());
    }
    let synth = synthesize(&config.synthetic)?;
    let mut out = OutputDir::create(&config.output_dir)?;
    out.write("data.csv", |w| Ok(write_csv_to(&synth.dataset, w)?))?;
    out.write("labels.csv", |w| Ok(synth.write_labels(w)?))?;
    out.write_json("ingestion.json", &IngestionConfig::for_written(&synth.dataset))?;
    #[derive(Serialize)]
    struct Details {
        n: usize,
        shell_rows: usize,
    }
    out.finish("generate", config, Details { n: synth.dataset.n(), shell_rows: synth.shell_count() })
}

pub fn sample(config: &RunConfig) -> Result<()> {
    let prepared = load(config)?;
    let data = &prepared.dataset;
    let params = search_space(config, data)?;
    let sampler = Sampler::new(data, params.transform(data.features())?)?;
    let mut out = OutputDir::create(&config.output_dir)?;
    let mut sizes = Vec::new();
    for plan in config.plans() {
        let sample = sampler.draw(plan)?;
        let label = plan.strategy.label();
        out.write(&format!("sample_{label}.csv"), |w| Ok(write_csv_to(&sample.dataset, w)?))?;
        out.write(&format!("sample_{label}.provenance.csv"), |w| Ok(sample.write_provenance(w)?))?;
        if plan.strategy == Strategy::Density {
            let scores = sampler.density_scores(plan.k_density)?;
            out.write("density_scores.csv", |w| write_scores(scores, w))?;
        }
        sizes.push((label, sample.len()));
    }
    #[derive(Serialize)]
    struct Details<'a> {
        data: DataDetails<'a>,
        sample_sizes: Vec<(&'a str, usize)>,
    }
    out.finish("sample", config, Details { data: DataDetails::of(&prepared), sample_sizes: sizes })
}

pub fn fit(config: &RunConfig, strategy: &str) -> Result<()> {
    let prepared = load(config)?;
    let (train, _) = split(config, &prepared.dataset)?;
    let model = if strategy == BASELINE_LABEL {
        fit_ols_with(&train, config.evaluation.rank_handling)?
    } else {
        let plan = plan_for(config, strategy)?;
        let params = search_space(config, &train)?;
        let sampler = Sampler::new(&train, params.transform(train.features())?)?;
        let sample = sampler.draw(&plan)?;
        fit_ols_with(&sample.dataset, config.evaluation.rank_handling)?
    };
    let mut out = OutputDir::create(&config.output_dir)?;
    out.write_text(&format!("model_{strategy}.json"), &model.to_json()?)?;
    #[derive(Serialize)]
    struct Details<'a> {
        data: DataDetails<'a>,
        strategy: &'a str,
        n_train: usize,
    }
    out.finish("fit", config, Details { data: DataDetails::of(&prepared), strategy, n_train: train.n() })
}

fn model_label(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    stem.strip_prefix("model_").map(str::to_string).unwrap_or(stem)
}

pub fn evaluate(config: &RunConfig, models: &[PathBuf]) -> Result<()> {
    let prepared = load(config)?;
    let (train, test) = split(config, &prepared.dataset)?;
    let split = PreparedSplit::new(&train, &test, &config.evaluation)?;
    let mut out = OutputDir::create(&config.output_dir)?;
    let mut labels = Vec::new();
    for path in models {
        let label = model_label(path);
        if labels.contains(&label) {
            return Err(Validation(format!("two models share the label `{label}`")).into());
        }
        let model = LinearModel::load(path).with_context(|| format!("model {}", path.display()))?;
        let report = score(&model, &test, &split.underrepresented, config.evaluation.subset_fraction, &label, 0, 0)?;
        out.write_json(&format!("report_{label}.json"), &ReportView::of(&report))?;
        out.write(&format!("residuals_{label}.csv"), |w| Ok(write_residuals_csv(&report, w)?))?;
        labels.push(label);
    }
    #[derive(Serialize)]
    struct Details<'a> {
        data: DataDetails<'a>,
        n_test: usize,
        n_underrepresented: usize,
        models: &'a [String],
    }
    let details = Details {
        data: DataDetails::of(&prepared),
        n_test: test.n(),
        n_underrepresented: split.underrepresented.len(),
        models: &labels,
    };
    out.finish("evaluate", config, details)
}

#[derive(Serialize)]
struct ReportView<'a> {
    strategy: &'a str,
    sample_size: usize,
    subset_fraction: f64,
    overall_rmse: f64,
    underrepresented_rmse: f64,
    n_underrepresented: usize,
}

impl<'a> ReportView<'a> {
    fn of(r: &'a rebalance_core::evaluation::EvaluationReport) -> Self {
        ReportView {
            strategy: &r.strategy,
            sample_size: r.sample_size,
            subset_fraction: r.subset_fraction,
            overall_rmse: r.overall_rmse,
            underrepresented_rmse: r.underrepresented_rmse,
            n_underrepresented: r.underrepresented_count(),
        }
    }
}

pub fn experiment(config: &RunConfig) -> Result<()> {
    let prepared = load(config)?;
    let plans = config.plans();
    let mut out = OutputDir::create(&config.output_dir)?;
    let summary = if config.resplit_per_iteration {
        run_resplit_experiment(&prepared.dataset, &config.split, plans, &config.evaluation)?
    } else {
        let (train, test) = split(config, &prepared.dataset)?;
        let split = PreparedSplit::new(&train, &test, &config.evaluation)?;
        out.write("test_density_scores.csv", |w| write_scores(&split.test_scores, w))?;
        run_experiment(&train, &test, plans, &config.evaluation)?
    };
    out.write_text("summary.json", &summary.to_json()?)?;
    out.write("boxplot.csv", |w| Ok(summary.write_boxplot_csv(w)?))?;
    for s in &summary.strategies {
        out.write(&format!("metrics_{}.csv", s.strategy), |w| Ok(s.write_metrics_csv(w)?))?;
        if let Some(first) = s.reports.first() {
            out.write(&format!("residuals_{}.csv", s.strategy), |w| Ok(write_residuals_csv(first, w)?))?;
        }
    }
    #[derive(Serialize)]
    struct Details<'a> {
        data: DataDetails<'a>,
        n_train: usize,
        n_test: usize,
        n_underrepresented: usize,
        strategies: Vec<&'a str>,
    }
    let details = Details {
        data: DataDetails::of(&prepared),
        n_train: summary.n_train,
        n_test: summary.n_test,
        n_underrepresented: summary.n_underrepresented,
        strategies: summary.strategies.iter().map(|s| s.strategy.as_str()).collect(),
    };
    out.finish("experiment", config, details)
}

fn read_residuals(path: &Path) -> Result<Vec<(RowId, f64)>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Validation(format!("cannot read residuals {}: {e}", path.display())))?;
    let header = rdr.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Validation(format!("{}: missing column `{name}`", path.display())))
    };
    let (id_col, res_col) = (col("row_id")?, col("residual")?);
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let bad = || Validation(format!("{}: malformed row at line {}", path.display(), i + 2));
        let id: u64 = record.get(id_col).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let r: f64 = record.get(res_col).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        out.push((RowId(id), r));
    }
    Ok(out)
}

pub fn pca(config: &RunConfig, residuals: Option<(PathBuf, PathBuf)>) -> Result<()> {
    let prepared = load(config)?;
    let (train, test) = split(config, &prepared.dataset)?;
    let pc = config.pca;
    let basis = match pc.fit_on {
        FittedOn::Train => train.features(),
        FittedOn::Test => test.features(),
        FittedOn::All => prepared.dataset.features(),
    };
    let model = fit_pca(basis, pc.components, pc.scaling, pc.fit_on)?;
    let scores = model.project(test.features())?;

    let winners: Option<HashMap<RowId, Winner>> = match &residuals {
        Some((a, b)) => {
            let map = winner_map(&read_residuals(a)?, &read_residuals(b)?)
                .map_err(|e| Validation(format!("residual files do not cover the same rows: {e}")))?;
            Some(map.into_iter().collect())
        }
        None => None,
    };

    let mut out = OutputDir::create(&config.output_dir)?;
    out.write("pca_scores.csv", |w| {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["row_id".to_string()];
        header.extend((1..=model.num_components()).map(|c| format!("pc{c}")));
        header.push("batch_label".into());
        if winners.is_some() {
            header.push("winner".into());
        }
        wtr.write_record(&header)?;
        for (i, &id) in test.row_ids().iter().enumerate() {
            let mut rec = vec![id.to_string()];
            rec.extend(scores.row(i).iter().map(|v| v.to_string()));
            rec.push(test.batch_labels().map(|b| b[i].to_string()).unwrap_or_default());
            if let Some(w) = &winners {
                let winner = w.get(&id).ok_or_else(|| anyhow!(Validation(format!("no residual for test row {id}"))))?;
                rec.push(winner.label().to_string());
            }
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    })?;
    out.write("pca_variance.csv", |w| {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["component", "variance_ratio", "cumulative_ratio", "variance"])?;
        let mut cumulative = 0.0;
        for (c, (&ratio, &var)) in model.explained_variance_ratios.iter().zip(&model.explained_variances).enumerate() {
            cumulative += ratio;
            wtr.write_record([format!("pc{}", c + 1), ratio.to_string(), cumulative.to_string(), var.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    })?;
    #[derive(Serialize)]
    struct Details<'a> {
        data: DataDetails<'a>,
        n_projected: usize,
        residuals: Option<[&'a Path; 2]>,
    }
    let details = Details {
        data: DataDetails::of(&prepared),
        n_projected: test.n(),
        residuals: residuals.as_ref().map(|(a, b)| [a.as_path(), b.as_path()]),
    };
    out.finish("pca", config, details)
}
