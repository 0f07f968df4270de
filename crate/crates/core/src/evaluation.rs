//! Dual-metric evaluation: RMSE on the full test set and on its most
//! underrepresented rows, plus the repeated-sampling experiment harness.

use std::collections::{HashMap, HashSet};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{fit_standardization, train_test_split, Dataset, RowId, SplitSpec, StandardizationParams};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::neighbors::{DensityScore, NeighborIndex, SearchMode};
use crate::regression::{fit_ols_with, LinearModel, RankHandling};
use crate::rng::derive_seed;
use crate::sampling::{Sampler, SamplingPlan, Strategy};

/// Label of the model fitted on all training rows.
pub const BASELINE_LABEL: &str = "all";
const TIE_TOL: f64 = 1e-12;

pub fn rmse(truth: &[f64], predictions: &[f64]) -> Result<f64> {
    if truth.len() != predictions.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), actual: predictions.len() });
    }
    if truth.is_empty() {
        return Err(Error::Empty("rmse of zero rows"));
    }
    let sse: f64 = truth.iter().zip(predictions).map(|(t, p)| (t - p) * (t - p)).sum();
    Ok((sse / truth.len() as f64).sqrt())
}

/// `ceil(fraction * n)` clamped to `1..=n`. Products within 1e-9 of an
/// integer count as that integer, so `0.07 * 100` gives 7, not 8.
pub fn subset_size(fraction: f64, n: usize) -> usize {
    let x = fraction * n as f64;
    let nearest = x.round();
    let count = if (x - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) { nearest } else { x.ceil() };
    (count as usize).clamp(1, n)
}

/// The `subset_size(fraction, n)` rows with the largest scores, ties broken
/// by ascending row id. Returned sorted by row id.
pub fn underrepresented_from_scores(scores: &[DensityScore], fraction: f64) -> Result<Vec<RowId>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!("subset fraction must lie in (0, 1], got {fraction}")));
    }
    if scores.is_empty() {
        return Err(Error::Empty("no rows to rank"));
    }
    let mut ranked: Vec<&DensityScore> = scores.iter().collect();
    ranked.sort_by(|a, b| b.mean_knn_distance.total_cmp(&a.mean_knn_distance).then(a.row_id.cmp(&b.row_id)));
    let mut ids: Vec<RowId> = ranked[..subset_size(fraction, scores.len())].iter().map(|s| s.row_id).collect();
    ids.sort();
    Ok(ids)
}

/// Underrepresented rows of `test`, scored by mean distance to their `k`
/// nearest other test rows in the given feature representation.
pub fn select_underrepresented(test: &Dataset, fraction: f64, k: usize) -> Result<Vec<RowId>> {
    test.ensure_complete()?;
    select_underrepresented_in(test.features(), test.row_ids(), fraction, k)
}

fn select_underrepresented_in(features: &Matrix, ids: &[RowId], fraction: f64, k: usize) -> Result<Vec<RowId>> {
    if k >= ids.len() {
        return Err(Error::TooFewRows { k, available: ids.len().saturating_sub(1) });
    }
    let index = NeighborIndex::build_with_ids(features.clone(), ids.to_vec(), SearchMode::Auto)?;
    underrepresented_from_scores(&index.self_density_scores(k)?, fraction)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowResidual {
    pub row_id: RowId,
    pub truth: f64,
    pub prediction: f64,
    /// `truth - prediction`.
    pub residual: f64,
    pub underrepresented: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub strategy: String,
    pub iteration: usize,
    pub seed: u64,
    pub sample_size: usize,
    pub subset_fraction: f64,
    pub overall_rmse: f64,
    pub underrepresented_rmse: f64,
    pub per_row: Vec<RowResidual>,
}

impl EvaluationReport {
    pub fn underrepresented_count(&self) -> usize {
        self.per_row.iter().filter(|r| r.underrepresented).count()
    }
}

/// Scores `model` on `test`; `underrepresented` names the subset rows.
pub fn evaluate(
    model: &LinearModel,
    test: &Dataset,
    underrepresented: &[RowId],
    subset_fraction: f64,
    strategy: &str,
    iteration: usize,
    seed: u64,
) -> Result<EvaluationReport> {
    let predictions = model.predict_dataset(test)?;
    let subset: HashSet<RowId> = underrepresented.iter().copied().collect();
    let per_row: Vec<RowResidual> = test
        .row_ids()
        .iter()
        .zip(test.target())
        .zip(&predictions)
        .map(|((&row_id, &truth), &prediction)| RowResidual {
            row_id,
            truth,
            prediction,
            residual: truth - prediction,
            underrepresented: subset.contains(&row_id),
        })
        .collect();
    let matched = per_row.iter().filter(|r| r.underrepresented).count();
    if matched != subset.len() {
        return Err(Error::RowMismatch);
    }
    let overall_rmse = rmse(test.target(), &predictions)?;
    let (sub_truth, sub_pred): (Vec<f64>, Vec<f64>) =
        per_row.iter().filter(|r| r.underrepresented).map(|r| (r.truth, r.prediction)).unzip();
    let underrepresented_rmse = rmse(&sub_truth, &sub_pred)?;
    Ok(EvaluationReport {
        strategy: strategy.to_string(),
        iteration,
        seed,
        sample_size: model.training_n,
        subset_fraction,
        overall_rmse,
        underrepresented_rmse,
        per_row,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Winner {
    A,
    B,
    Tie,
}

impl Winner {
    pub fn label(self) -> &'static str {
        match self {
            Winner::A => "a",
            Winner::B => "b",
            Winner::Tie => "tie",
        }
    }
}

/// Per row, which report has the smaller absolute residual. Rows follow
/// `a`'s order.
pub fn residual_winner_map(a: &EvaluationReport, b: &EvaluationReport) -> Result<Vec<(RowId, Winner)>> {
    let pairs_a: Vec<(RowId, f64)> = a.per_row.iter().map(|r| (r.row_id, r.residual)).collect();
    let pairs_b: Vec<(RowId, f64)> = b.per_row.iter().map(|r| (r.row_id, r.residual)).collect();
    winner_map(&pairs_a, &pairs_b)
}

/// [`residual_winner_map`] over bare `(row_id, residual)` lists.
pub fn winner_map(a: &[(RowId, f64)], b: &[(RowId, f64)]) -> Result<Vec<(RowId, Winner)>> {
    if a.len() != b.len() {
        return Err(Error::RowMismatch);
    }
    let lookup: HashMap<RowId, f64> = b.iter().copied().collect();
    if lookup.len() != b.len() {
        return Err(Error::RowMismatch);
    }
    a.iter()
        .map(|&(id, ra)| {
            let rb = *lookup.get(&id).ok_or(Error::RowMismatch)?;
            let (ea, eb) = (ra.abs(), rb.abs());
            let winner = if (ea - eb).abs() <= TIE_TOL {
                Winner::Tie
            } else if ea < eb {
                Winner::A
            } else {
                Winner::B
            };
            Ok((id, winner))
        })
        .collect()
}

/// Five-number summary with linearly interpolated quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl BoxStats {
    pub fn from_values(values: &[f64]) -> Result<BoxStats> {
        if values.is_empty() {
            return Err(Error::Empty("box statistics of zero values"));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let h = p * (sorted.len() - 1) as f64;
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        };
        Ok(BoxStats { min: sorted[0], q1: q(0.25), median: q(0.5), q3: q(0.75), max: sorted[sorted.len() - 1] })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubsetReference {
    /// Score test rows against the other test rows.
    #[default]
    Test,
    /// Score test rows against the training rows.
    Train,
}

fn default_iterations() -> usize {
    10
}
fn default_subset_fraction() -> f64 {
    0.10
}
fn default_k() -> usize {
    100
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_subset_fraction")]
    pub subset_fraction: f64,
    /// Neighbors used to rank test rows for the underrepresented subset.
    #[serde(default = "default_k")]
    pub k_underrepresented: usize,
    #[serde(default)]
    pub subset_reference: SubsetReference,
    /// z-score covariates (training statistics) before distance computations.
    #[serde(default = "default_true")]
    pub standardize: bool,
    #[serde(default)]
    pub rank_handling: RankHandling,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            iterations: default_iterations(),
            base_seed: 0,
            subset_fraction: default_subset_fraction(),
            k_underrepresented: default_k(),
            subset_reference: SubsetReference::Test,
            standardize: true,
            rank_handling: RankHandling::Fail,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be at least 1"));
        }
        if !(self.subset_fraction > 0.0 && self.subset_fraction < 1.0) {
            return Err(Error::invalid(format!("subset_fraction must lie in (0, 1), got {}", self.subset_fraction)));
        }
        if self.k_underrepresented == 0 {
            return Err(Error::invalid("k_underrepresented must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: String,
    pub reports: Vec<EvaluationReport>,
    pub overall_rmse: BoxStats,
    pub underrepresented_rmse: BoxStats,
}

impl StrategySummary {
    fn from_reports(strategy: String, reports: Vec<EvaluationReport>) -> Result<Self> {
        let overall: Vec<f64> = reports.iter().map(|r| r.overall_rmse).collect();
        let under: Vec<f64> = reports.iter().map(|r| r.underrepresented_rmse).collect();
        Ok(StrategySummary {
            strategy,
            overall_rmse: BoxStats::from_values(&overall)?,
            underrepresented_rmse: BoxStats::from_values(&under)?,
            reports,
        })
    }

    /// `iteration,seed,sample_size,overall_rmse,underrepresented_rmse`.
    pub fn write_metrics_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["iteration", "seed", "sample_size", "overall_rmse", "underrepresented_rmse"])?;
        for r in &self.reports {
            wtr.write_record([
                r.iteration.to_string(),
                r.seed.to_string(),
                r.sample_size.to_string(),
                r.overall_rmse.to_string(),
                r.underrepresented_rmse.to_string(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("<metrics output>", e))?;
        Ok(())
    }
}

/// Results for the all-data baseline (first) and each sampling plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub n_train: usize,
    pub n_test: usize,
    pub n_underrepresented: usize,
    pub strategies: Vec<StrategySummary>,
}

#[derive(Serialize)]
struct IterationMetrics {
    iteration: usize,
    seed: u64,
    sample_size: usize,
    overall_rmse: f64,
    underrepresented_rmse: f64,
}

#[derive(Serialize)]
struct StrategyView<'a> {
    strategy: &'a str,
    overall_rmse: BoxStats,
    underrepresented_rmse: BoxStats,
    iterations: Vec<IterationMetrics>,
}

#[derive(Serialize)]
struct SummaryView<'a> {
    config: &'a ExperimentConfig,
    n_train: usize,
    n_test: usize,
    n_underrepresented: usize,
    strategies: Vec<StrategyView<'a>>,
}

impl ExperimentSummary {
    pub fn strategy(&self, label: &str) -> Option<&StrategySummary> {
        self.strategies.iter().find(|s| s.strategy == label)
    }

    pub fn baseline(&self) -> &StrategySummary {
        &self.strategies[0]
    }

    /// Quantiles and per-iteration metrics without per-row residuals.
    pub fn to_json(&self) -> Result<String> {
        let view = SummaryView {
            config: &self.config,
            n_train: self.n_train,
            n_test: self.n_test,
            n_underrepresented: self.n_underrepresented,
            strategies: self
                .strategies
                .iter()
                .map(|s| StrategyView {
                    strategy: &s.strategy,
                    overall_rmse: s.overall_rmse,
                    underrepresented_rmse: s.underrepresented_rmse,
                    iterations: s
                        .reports
                        .iter()
                        .map(|r| IterationMetrics {
                            iteration: r.iteration,
                            seed: r.seed,
                            sample_size: r.sample_size,
                            overall_rmse: r.overall_rmse,
                            underrepresented_rmse: r.underrepresented_rmse,
                        })
                        .collect(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&view)?)
    }

    /// Long-format boxplot table: `strategy,metric,min,q1,median,q3,max`.
    pub fn write_boxplot_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["strategy", "metric", "min", "q1", "median", "q3", "max"])?;
        for s in &self.strategies {
            for (metric, b) in [("overall_rmse", s.overall_rmse), ("underrepresented_rmse", s.underrepresented_rmse)] {
                let mut rec = vec![s.strategy.clone(), metric.to_string()];
                rec.extend([b.min, b.q1, b.median, b.q3, b.max].iter().map(|v| v.to_string()));
                wtr.write_record(&rec)?;
            }
        }
        wtr.flush().map_err(|e| Error::io("<boxplot output>", e))?;
        Ok(())
    }
}

/// `row_id,truth,prediction,residual,underrepresented`.
pub fn write_residuals_csv<W: Write>(report: &EvaluationReport, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["row_id", "truth", "prediction", "residual", "underrepresented"])?;
    for r in &report.per_row {
        wtr.write_record([
            r.row_id.to_string(),
            r.truth.to_string(),
            r.prediction.to_string(),
            r.residual.to_string(),
            (r.underrepresented as u8).to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<residual output>", e))?;
    Ok(())
}

/// The search-space view of one train/test split shared by every run on it.
pub struct PreparedSplit<'a> {
    pub train: &'a Dataset,
    pub test: &'a Dataset,
    pub standardization: StandardizationParams,
    pub test_search: Matrix,
    pub test_scores: Vec<DensityScore>,
    pub underrepresented: Vec<RowId>,
    sampler: Sampler<'a>,
}

impl<'a> PreparedSplit<'a> {
    pub fn new(train: &'a Dataset, test: &'a Dataset, config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        train.ensure_complete()?;
        test.ensure_complete()?;
        if train.feature_names() != test.feature_names() {
            return Err(Error::NameMismatch {
                expected: train.feature_names().to_vec(),
                actual: test.feature_names().to_vec(),
            });
        }
        let train_ids: HashSet<RowId> = train.row_ids().iter().copied().collect();
        if test.row_ids().iter().any(|id| train_ids.contains(id)) {
            return Err(Error::invalid("train and test share row ids"));
        }
        let standardization = if config.standardize {
            fit_standardization(train)?
        } else {
            StandardizationParams::identity(train.p())
        };
        let sampler = Sampler::new(train, standardization.transform(train.features())?)?;
        let test_search = standardization.transform(test.features())?;
        let k = config.k_underrepresented;
        let test_scores = match config.subset_reference {
            SubsetReference::Test => {
                if k >= test.n() {
                    return Err(Error::TooFewRows { k, available: test.n().saturating_sub(1) });
                }
                NeighborIndex::build_with_ids(test_search.clone(), test.row_ids().to_vec(), SearchMode::Auto)?
                    .self_density_scores(k)?
            }
            SubsetReference::Train => sampler.index().mean_knn_distances(&test_search, test.row_ids(), k, false)?,
        };
        let underrepresented = underrepresented_from_scores(&test_scores, config.subset_fraction)?;
        Ok(PreparedSplit { train, test, standardization, test_search, test_scores, underrepresented, sampler })
    }

    pub fn sampler(&self) -> &Sampler<'a> {
        &self.sampler
    }

    fn run(&self, plans: &[SamplingPlan], config: &ExperimentConfig, iterations: &[usize]) -> Result<Vec<Vec<EvaluationReport>>> {
        for plan in plans {
            plan.validate()?;
            if plan.strategy == Strategy::Density {
                self.sampler.density_scores(plan.k_density)?;
            }
        }
        let baseline = fit_ols_with(self.train, config.rank_handling).map_err(|e| Error::Experiment {
            strategy: BASELINE_LABEL.into(),
            iteration: 0,
            source: Box::new(e),
        })?;
        let base_report = evaluate(&baseline, self.test, &self.underrepresented, config.subset_fraction, BASELINE_LABEL, 0, 0)?;
        let mut out = vec![iterations
            .iter()
            .map(|&i| EvaluationReport { iteration: i, seed: derive_seed(config.base_seed, i), ..base_report.clone() })
            .collect()];

        let jobs: Vec<(usize, usize)> = (0..plans.len()).flat_map(|p| iterations.iter().map(move |&i| (p, i))).collect();
        let reports: Vec<EvaluationReport> = jobs
            .par_iter()
            .map(|&(p, i)| {
                let plan = plans[p].with_seed(derive_seed(config.base_seed, i));
                let label = plan.strategy.label();
                let wrap = |e: Error| Error::Experiment { strategy: label.into(), iteration: i, source: Box::new(e) };
                let sample = self.sampler.draw(&plan).map_err(wrap)?;
                let model = fit_ols_with(&sample.dataset, config.rank_handling).map_err(wrap)?;
                evaluate(&model, self.test, &self.underrepresented, config.subset_fraction, label, i, plan.seed).map_err(wrap)
            })
            .collect::<Result<_>>()?;
        let mut it = reports.into_iter();
        for _ in plans {
            out.push(it.by_ref().take(iterations.len()).collect());
        }
        Ok(out)
    }
}

fn labels(plans: &[SamplingPlan]) -> Result<Vec<String>> {
    let mut seen = HashSet::new();
    let mut out = vec![BASELINE_LABEL.to_string()];
    for plan in plans {
        if !seen.insert(plan.strategy) {
            return Err(Error::invalid(format!("strategy `{}` listed twice", plan.strategy)));
        }
        out.push(plan.strategy.label().to_string());
    }
    Ok(out)
}

/// Repeats sampling and fitting `config.iterations` times on a fixed split.
/// Iteration `i` uses seed `base_seed ^ i` for every plan; the baseline is
/// fitted once and its report repeated.
pub fn run_experiment(train: &Dataset, test: &Dataset, plans: &[SamplingPlan], config: &ExperimentConfig) -> Result<ExperimentSummary> {
    let names = labels(plans)?;
    let prepared = PreparedSplit::new(train, test, config)?;
    let iterations: Vec<usize> = (0..config.iterations).collect();
    let runs = prepared.run(plans, config, &iterations)?;
    Ok(ExperimentSummary {
        config: *config,
        n_train: train.n(),
        n_test: test.n(),
        n_underrepresented: prepared.underrepresented.len(),
        strategies: names
            .into_iter()
            .zip(runs)
            .map(|(name, reports)| StrategySummary::from_reports(name, reports))
            .collect::<Result<_>>()?,
    })
}

/// Variant that draws a fresh split (seed `split.seed ^ i`) for every
/// iteration, so the baseline varies too.
pub fn run_resplit_experiment(
    dataset: &Dataset,
    split: &SplitSpec,
    plans: &[SamplingPlan],
    config: &ExperimentConfig,
) -> Result<ExperimentSummary> {
    let names = labels(plans)?;
    config.validate()?;
    let mut per_strategy: Vec<Vec<EvaluationReport>> = vec![Vec::new(); names.len()];
    let (mut n_train, mut n_test, mut n_under) = (0, 0, 0);
    for i in 0..config.iterations {
        let spec = SplitSpec { seed: derive_seed(split.seed, i), ..*split };
        let (train, test) = train_test_split(dataset, &spec)?;
        let prepared = PreparedSplit::new(&train, &test, config)?;
        for (acc, mut reports) in per_strategy.iter_mut().zip(prepared.run(plans, config, &[i])?) {
            acc.append(&mut reports);
        }
        (n_train, n_test, n_under) = (train.n(), test.n(), prepared.underrepresented.len());
    }
    Ok(ExperimentSummary {
        config: *config,
        n_train,
        n_test,
        n_underrepresented: n_under,
        strategies: names
            .into_iter()
            .zip(per_strategy)
            .map(|(name, reports)| StrategySummary::from_reports(name, reports))
            .collect::<Result<_>>()?,
    })
}
