//! Covariate-space rebalancing samplers.
//!
//! * `1point`: uniform draws `z` in the training hyper-rectangle, each
//!   replaced by its nearest training row, plus an equal-weight random
//!   subsample of the training rows.
//! * `mean`: as `1point`, but each `z` becomes the componentwise mean of its
//!   `k_mean` nearest training rows, target included.
//! * `density`: rows drawn with replacement, with probability proportional
//!   to their mean distance to the `k_density` nearest other rows.
//! * `random`: a plain uniform subsample of the same size as `1point`. Not
//!   a rebalancing method, only a control.
//!
//! Neighbor searches run on whatever representation the index was built
//! over (standardized covariates by default). Emitted rows always carry the
//! training set's own covariates and targets.

use std::fmt;
use std::io::Write;
use std::sync::OnceLock;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, RowId};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::neighbors::{DensityScore, NeighborIndex};
use crate::rng::{fraction_count, seeded};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "1point")]
    OnePoint,
    #[serde(rename = "mean")]
    Mean,
    #[serde(rename = "density")]
    Density,
    #[serde(rename = "random")]
    RandomBaseline,
}

impl Strategy {
    pub fn label(self) -> &'static str {
        match self {
            Strategy::OnePoint => "1point",
            Strategy::Mean => "mean",
            Strategy::Density => "density",
            Strategy::RandomBaseline => "random",
        }
    }

    pub fn parse(label: &str) -> Option<Strategy> {
        [Strategy::OnePoint, Strategy::Mean, Strategy::Density, Strategy::RandomBaseline]
            .into_iter()
            .find(|s| s.label() == label)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

fn default_fraction() -> f64 {
    0.10
}
fn default_k_mean() -> usize {
    5
}
fn default_k_density() -> usize {
    100
}

/// Everything that determines a sample, given the training data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingPlan {
    pub strategy: Strategy,
    /// Share of training rows produced from hyper-rectangle draws.
    #[serde(default = "default_fraction")]
    pub edge_fraction: f64,
    /// Share of training rows drawn uniformly at random.
    #[serde(default = "default_fraction")]
    pub random_fraction: f64,
    #[serde(default = "default_fraction")]
    pub density_fraction: f64,
    #[serde(default = "default_k_mean")]
    pub k_mean: usize,
    #[serde(default = "default_k_density")]
    pub k_density: usize,
    #[serde(default)]
    pub seed: u64,
    /// Draw the random half with replacement.
    #[serde(default)]
    pub random_with_replacement: bool,
}

impl SamplingPlan {
    pub fn new(strategy: Strategy, seed: u64) -> Self {
        SamplingPlan {
            strategy,
            edge_fraction: default_fraction(),
            random_fraction: default_fraction(),
            density_fraction: default_fraction(),
            k_mean: default_k_mean(),
            k_density: default_k_density(),
            seed,
            random_with_replacement: false,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        SamplingPlan { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let fractions = [
            ("edge_fraction", self.edge_fraction),
            ("random_fraction", self.random_fraction),
            ("density_fraction", self.density_fraction),
        ];
        for (name, f) in fractions {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::invalid(format!("{name} must lie in (0, 1], got {f}")));
            }
        }
        if self.k_mean == 0 || self.k_density == 0 {
            return Err(Error::invalid("k_mean and k_density must be at least 1"));
        }
        Ok(())
    }

    /// Number of rows this plan emits for `n` training rows.
    pub fn sample_size(&self, n: usize) -> usize {
        match self.strategy {
            Strategy::Density => fraction_count(self.density_fraction, n),
            _ => fraction_count(self.edge_fraction, n) + fraction_count(self.random_fraction, n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProvenanceTag {
    #[serde(rename = "edge-1nn")]
    Edge1nn,
    EdgeMean,
    Random,
    Density,
}

impl ProvenanceTag {
    pub fn label(self) -> &'static str {
        match self {
            ProvenanceTag::Edge1nn => "edge-1nn",
            ProvenanceTag::EdgeMean => "edge-mean",
            ProvenanceTag::Random => "random",
            ProvenanceTag::Density => "density",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowProvenance {
    pub tag: ProvenanceTag,
    /// Training row ids the row was copied or averaged from.
    pub sources: Vec<RowId>,
}

/// A rebalanced training set. Row ids are `0..m`; `provenance[i]` links row
/// `i` back to the training rows it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledDataset {
    pub dataset: Dataset,
    pub provenance: Vec<RowProvenance>,
    pub plan: SamplingPlan,
}

impl SampledDataset {
    pub fn len(&self) -> usize {
        self.provenance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.provenance.is_empty()
    }

    pub fn count(&self, tag: ProvenanceTag) -> usize {
        self.provenance.iter().filter(|p| p.tag == tag).count()
    }

    /// `row_index,provenance,source_row_ids,seed` with sources joined by `;`.
    pub fn write_provenance<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["row_index", "provenance", "source_row_ids", "seed"])?;
        for (i, p) in self.provenance.iter().enumerate() {
            let sources = p.sources.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";");
            wtr.write_record([i.to_string(), p.tag.label().to_string(), sources, self.plan.seed.to_string()])?;
        }
        wtr.flush().map_err(|e| Error::io("<provenance output>", e))?;
        Ok(())
    }
}

/// Axis-aligned bounding box of a set of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperRectangle {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl HyperRectangle {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }
}

pub fn hyper_rectangle(features: &Matrix) -> Result<HyperRectangle> {
    if features.is_empty() {
        return Err(Error::Empty("hyper-rectangle of an empty matrix"));
    }
    let mut lower = features.row(0).to_vec();
    let mut upper = lower.clone();
    for row in features.rows_iter().skip(1) {
        for ((lo, hi), &v) in lower.iter_mut().zip(upper.iter_mut()).zip(row) {
            *lo = lo.min(v);
            *hi = hi.max(v);
        }
    }
    Ok(HyperRectangle { lower, upper })
}

/// `count` points with each coordinate independently uniform on its side.
pub fn sample_uniform_z<R: Rng + ?Sized>(rect: &HyperRectangle, count: usize, rng: &mut R) -> Matrix {
    let p = rect.dim();
    let mut out = Matrix::zeros(count, p);
    for i in 0..count {
        for j in 0..p {
            let (lo, hi) = (rect.lower[j], rect.upper[j]);
            let u: f64 = rng.random();
            // clamp guards the one-ulp overshoot of lo + (hi - lo) * u
            out.set(i, j, (lo + (hi - lo) * u).clamp(lo, hi));
        }
    }
    out
}

/// Equal-weight row positions out of `n`, in draw order.
pub fn sample_random_equal_weight<R: Rng + ?Sized>(
    n: usize,
    count: usize,
    with_replacement: bool,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if with_replacement {
        if n == 0 && count > 0 {
            return Err(Error::Empty("cannot draw from zero rows"));
        }
        return Ok((0..count).map(|_| rng.random_range(0..n)).collect());
    }
    if count > n {
        return Err(Error::invalid(format!(
            "cannot draw {count} rows without replacement from {n}"
        )));
    }
    Ok(rand::seq::index::sample(rng, n, count).into_vec())
}

/// Scores normalized to sum to one.
pub fn density_weights(scores: &[DensityScore]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::Empty("no density scores"));
    }
    if scores.iter().any(|s| !s.mean_knn_distance.is_finite() || s.mean_knn_distance < 0.0) {
        return Err(Error::invalid("density scores must be finite and non-negative"));
    }
    let total = compensated_sum(scores.iter().map(|s| s.mean_knn_distance));
    if total == 0.0 {
        return Err(Error::NoDensityContrast);
    }
    Ok(scores.iter().map(|s| s.mean_knn_distance / total).collect())
}

fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `count` positions drawn with replacement by cumulative-sum inversion.
pub fn weighted_draws<R: Rng + ?Sized>(weights: &[f64], count: usize, rng: &mut R) -> Result<Vec<usize>> {
    let dist = WeightedIndex::new(weights).map_err(|e| Error::invalid(format!("sampling weights: {e}")))?;
    Ok((0..count).map(|_| dist.sample(rng)).collect())
}

fn check_inputs(train: &Dataset, index: &NeighborIndex, plan: &SamplingPlan, expected: &[Strategy]) -> Result<()> {
    plan.validate()?;
    if !expected.contains(&plan.strategy) {
        return Err(Error::invalid(format!("plan strategy `{}` does not match this sampler", plan.strategy)));
    }
    train.ensure_complete()?;
    if index.len() != train.n() {
        return Err(Error::DimensionMismatch { expected: train.n(), actual: index.len() });
    }
    if plan.sample_size(train.n()) == 0 {
        return Err(Error::invalid(format!("plan yields an empty sample for {} training rows", train.n())));
    }
    Ok(())
}

/// Copies and synthesized rows assembled into a fresh dataset.
struct Builder<'a> {
    train: &'a Dataset,
    features: Vec<f64>,
    target: Vec<f64>,
    provenance: Vec<RowProvenance>,
}

impl<'a> Builder<'a> {
    fn new(train: &'a Dataset, capacity: usize) -> Self {
        Builder {
            train,
            features: Vec::with_capacity(capacity * train.p()),
            target: Vec::with_capacity(capacity),
            provenance: Vec::with_capacity(capacity),
        }
    }

    fn copy(&mut self, position: usize, tag: ProvenanceTag) {
        self.features.extend_from_slice(self.train.features().row(position));
        self.target.push(self.train.target()[position]);
        self.provenance.push(RowProvenance { tag, sources: vec![self.train.row_ids()[position]] });
    }

    fn average(&mut self, positions: &[usize]) {
        let p = self.train.p();
        let k = positions.len() as f64;
        let start = self.features.len();
        self.features.resize(start + p, 0.0);
        let mut y = 0.0;
        for &pos in positions {
            for (acc, v) in self.features[start..].iter_mut().zip(self.train.features().row(pos)) {
                *acc += v;
            }
            y += self.train.target()[pos];
        }
        self.features[start..].iter_mut().for_each(|v| *v /= k);
        self.target.push(y / k);
        self.provenance.push(RowProvenance {
            tag: ProvenanceTag::EdgeMean,
            sources: positions.iter().map(|&i| self.train.row_ids()[i]).collect(),
        });
    }

    fn finish(self, plan: SamplingPlan) -> Result<SampledDataset> {
        let m = self.target.len();
        let dataset = Dataset::new(
            Matrix::from_row_major(m, self.train.p(), self.features)?,
            self.target,
            self.train.feature_names().to_vec(),
            self.train.target_name(),
            (0..m as u64).map(RowId).collect(),
            None,
        )?;
        Ok(SampledDataset { dataset, provenance: self.provenance, plan })
    }
}

/// Uniform draws in the index's bounding box, each mapped to its `k`
/// nearest indexed positions. Ordered by draw.
fn edge_neighbors<R: Rng + ?Sized>(index: &NeighborIndex, count: usize, k: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    let rect = hyper_rectangle(index.points())?;
    let z = sample_uniform_z(&rect, count, rng);
    (0..count)
        .into_par_iter()
        .map(|i| Ok(index.knn(z.row(i), k, None)?.into_iter().map(|nb| nb.position).collect()))
        .collect()
}

fn append_random<R: Rng + ?Sized>(builder: &mut Builder<'_>, plan: &SamplingPlan, count: usize, rng: &mut R) -> Result<()> {
    let n = builder.train.n();
    for pos in sample_random_equal_weight(n, count, plan.random_with_replacement, rng)? {
        builder.copy(pos, ProvenanceTag::Random);
    }
    Ok(())
}

pub fn sample_1point(train: &Dataset, index: &NeighborIndex, plan: &SamplingPlan) -> Result<SampledDataset> {
    check_inputs(train, index, plan, &[Strategy::OnePoint])?;
    let n = train.n();
    let (m_edge, m_random) = (fraction_count(plan.edge_fraction, n), fraction_count(plan.random_fraction, n));
    let mut rng = seeded(plan.seed);
    let mut builder = Builder::new(train, m_edge + m_random);
    for nn in edge_neighbors(index, m_edge, 1, &mut rng)? {
        builder.copy(nn[0], ProvenanceTag::Edge1nn);
    }
    append_random(&mut builder, plan, m_random, &mut rng)?;
    builder.finish(*plan)
}

pub fn sample_mean(train: &Dataset, index: &NeighborIndex, plan: &SamplingPlan) -> Result<SampledDataset> {
    check_inputs(train, index, plan, &[Strategy::Mean])?;
    let n = train.n();
    if n < plan.k_mean {
        return Err(Error::TooFewRows { k: plan.k_mean, available: n });
    }
    let (m_edge, m_random) = (fraction_count(plan.edge_fraction, n), fraction_count(plan.random_fraction, n));
    let mut rng = seeded(plan.seed);
    let mut builder = Builder::new(train, m_edge + m_random);
    for nn in edge_neighbors(index, m_edge, plan.k_mean, &mut rng)? {
        builder.average(&nn);
    }
    append_random(&mut builder, plan, m_random, &mut rng)?;
    builder.finish(*plan)
}

pub fn sample_density(train: &Dataset, index: &NeighborIndex, plan: &SamplingPlan) -> Result<SampledDataset> {
    check_inputs(train, index, plan, &[Strategy::Density])?;
    if train.n() <= plan.k_density {
        return Err(Error::TooFewRows { k: plan.k_density, available: train.n().saturating_sub(1) });
    }
    let scores = index.self_density_scores(plan.k_density)?;
    sample_density_from_scores(train, &scores, plan)
}

/// Density sampling with precomputed self-excluded scores, one per training
/// row in row order.
pub fn sample_density_from_scores(train: &Dataset, scores: &[DensityScore], plan: &SamplingPlan) -> Result<SampledDataset> {
    plan.validate()?;
    if scores.len() != train.n() {
        return Err(Error::DimensionMismatch { expected: train.n(), actual: scores.len() });
    }
    let weights = density_weights(scores)?;
    let m = fraction_count(plan.density_fraction, train.n());
    if m == 0 {
        return Err(Error::invalid("plan yields an empty sample"));
    }
    let mut rng = seeded(plan.seed);
    let mut builder = Builder::new(train, m);
    for pos in weighted_draws(&weights, m, &mut rng)? {
        builder.copy(pos, ProvenanceTag::Density);
    }
    builder.finish(*plan)
}

pub fn sample_random_baseline(train: &Dataset, index: &NeighborIndex, plan: &SamplingPlan) -> Result<SampledDataset> {
    check_inputs(train, index, plan, &[Strategy::RandomBaseline])?;
    let m = plan.sample_size(train.n());
    let mut rng = seeded(plan.seed);
    let mut builder = Builder::new(train, m);
    append_random(&mut builder, plan, m, &mut rng)?;
    builder.finish(*plan)
}

/// Dispatches on `plan.strategy`.
pub fn draw_sample(train: &Dataset, index: &NeighborIndex, plan: &SamplingPlan) -> Result<SampledDataset> {
    match plan.strategy {
        Strategy::OnePoint => sample_1point(train, index, plan),
        Strategy::Mean => sample_mean(train, index, plan),
        Strategy::Density => sample_density(train, index, plan),
        Strategy::RandomBaseline => sample_random_baseline(train, index, plan),
    }
}

/// Training data plus its neighbor index, caching density scores per `k`
/// across repeated draws.
pub struct Sampler<'a> {
    train: &'a Dataset,
    index: NeighborIndex,
    scores: OnceLock<(usize, Vec<DensityScore>)>,
}

impl<'a> Sampler<'a> {
    /// `search_features` is the representation neighbor queries run in; it
    /// must have one row per training row.
    pub fn new(train: &'a Dataset, search_features: Matrix) -> Result<Self> {
        let index = NeighborIndex::build_with_ids(search_features, train.row_ids().to_vec(), Default::default())?;
        Ok(Sampler { train, index, scores: OnceLock::new() })
    }

    pub fn index(&self) -> &NeighborIndex {
        &self.index
    }

    pub fn density_scores(&self, k: usize) -> Result<&[DensityScore]> {
        if let Some((cached_k, scores)) = self.scores.get() {
            if *cached_k == k {
                return Ok(scores);
            }
            return Err(Error::invalid("sampler already caches density scores for a different k"));
        }
        if self.train.n() <= k {
            return Err(Error::TooFewRows { k, available: self.train.n().saturating_sub(1) });
        }
        let scores = self.index.self_density_scores(k)?;
        Ok(&self.scores.get_or_init(|| (k, scores)).1)
    }

    pub fn draw(&self, plan: &SamplingPlan) -> Result<SampledDataset> {
        match plan.strategy {
            Strategy::Density => {
                plan.validate()?;
                let scores = self.density_scores(plan.k_density)?;
                sample_density_from_scores(self.train, scores, plan)
            }
            _ => draw_sample(self.train, &self.index, plan),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn dataset(rows: &[Vec<f64>], target: Vec<f64>) -> Dataset {
        Dataset::from_features(Matrix::from_rows(rows).unwrap(), target).unwrap()
    }

    fn grid(n: usize) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![(i % 10) as f64, (i / 10) as f64 * 0.5]).collect();
        let y = (0..n).map(|i| i as f64).collect();
        dataset(&rows, y)
    }

    fn index_of(d: &Dataset) -> NeighborIndex {
        NeighborIndex::build_with_ids(d.features().clone(), d.row_ids().to_vec(), Default::default()).unwrap()
    }

    fn scores(values: &[f64]) -> Vec<DensityScore> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| DensityScore { row_id: RowId(i as u64), mean_knn_distance: v })
            .collect()
    }

    #[test]
    fn rectangle_of_rows() {
        let m = Matrix::from_rows(&[[0.0, 0.0], [1.0, 2.0], [0.5, 1.0]]).unwrap();
        let r = hyper_rectangle(&m).unwrap();
        assert_eq!(r.lower, vec![0.0, 0.0]);
        assert_eq!(r.upper, vec![1.0, 2.0]);

        let single = hyper_rectangle(&Matrix::from_rows(&[[3.0, -1.0]]).unwrap()).unwrap();
        assert_eq!(single.lower, single.upper);
        assert!(hyper_rectangle(&Matrix::zeros(0, 2)).is_err());
    }

    #[test]
    fn constant_side_yields_the_constant() {
        let r = HyperRectangle { lower: vec![0.0, 4.0], upper: vec![1.0, 4.0] };
        let z = sample_uniform_z(&r, 100, &mut seeded(1));
        assert!(z.rows_iter().all(|row| row[1] == 4.0 && (0.0..=1.0).contains(&row[0])));
    }

    #[test]
    fn uniform_draws_are_deterministic_and_centered() {
        let r = HyperRectangle { lower: vec![0.0, 0.0], upper: vec![1.0, 1.0] };
        let a = sample_uniform_z(&r, 10_000, &mut seeded(9));
        assert_eq!(a, sample_uniform_z(&r, 10_000, &mut seeded(9)));
        assert!(a.rows_iter().all(|row| r.contains(row)));
        for j in 0..2 {
            let mean = a.column(j).iter().sum::<f64>() / 10_000.0;
            assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
        }
    }

    #[test]
    fn random_rows_without_replacement() {
        let all = sample_random_equal_weight(12, 12, false, &mut seeded(3)).unwrap();
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(sorted, (0..12).collect::<Vec<_>>());
        assert_eq!(all, sample_random_equal_weight(12, 12, false, &mut seeded(3)).unwrap());
        assert!(sample_random_equal_weight(5, 6, false, &mut seeded(3)).is_err());
    }

    #[test]
    fn single_draw_frequency_is_uniform() {
        // each of n rows is expected trials / n times; 3 sigma binomial band
        let n = 8;
        let trials = 10_000;
        let mut counts = vec![0usize; n];
        for seed in 0..trials {
            counts[sample_random_equal_weight(n, 1, false, &mut seeded(seed)).unwrap()[0]] += 1;
        }
        let p = 1.0 / n as f64;
        let mean = trials as f64 * p;
        let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - mean).abs() <= 3.0 * sigma, "count {c}, mean {mean}, sigma {sigma}");
        }
    }

    #[test]
    fn hand_weights() {
        let w = density_weights(&scores(&[1.5, 1.0, 1.5])).unwrap();
        assert_eq!(w, vec![0.375, 0.25, 0.375]);
        let w = density_weights(&scores(&[2.0; 4])).unwrap();
        assert_eq!(w, vec![0.25; 4]);
        let w = density_weights(&scores(&[0.0, 1.0, 3.0])).unwrap();
        assert_eq!(w[0], 0.0);
        assert!(matches!(density_weights(&scores(&[0.0, 0.0])), Err(Error::NoDensityContrast)));
    }

    #[test]
    fn zero_weight_rows_are_never_drawn() {
        let draws = weighted_draws(&[0.0, 0.5, 0.0, 0.5], 5_000, &mut seeded(4)).unwrap();
        assert!(draws.iter().all(|&i| i == 1 || i == 3));
    }

    #[test]
    fn onepoint_size_and_snapping() {
        let train = grid(100);
        let idx = index_of(&train);
        let s = sample_1point(&train, &idx, &SamplingPlan::new(Strategy::OnePoint, 5)).unwrap();
        assert_eq!(s.len(), 20);
        assert_eq!(s.count(ProvenanceTag::Edge1nn), 10);
        assert_eq!(s.count(ProvenanceTag::Random), 10);
        for (i, prov) in s.provenance.iter().enumerate() {
            assert_eq!(prov.sources.len(), 1);
            let src = prov.sources[0].0 as usize;
            assert_eq!(s.dataset.features().row(i), train.features().row(src));
            assert_eq!(s.dataset.target()[i], train.target()[src]);
        }
    }

    #[test]
    fn onepoint_snaps_to_the_near_cluster() {
        // cluster A near the origin, cluster B far away; rectangle spans both
        let mut rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 * 0.01, 0.0]).collect();
        rows.extend((0..20).map(|i| vec![100.0 + i as f64 * 0.01, 100.0]));
        let train = dataset(&rows, vec![0.0; 40]);
        let idx = index_of(&train);
        let nn = idx.knn(&[1.0, 2.0], 1, None).unwrap();
        assert!(nn[0].position < 20);
    }

    #[test]
    fn mean_synthesis() {
        let rows: Vec<Vec<f64>> = vec![vec![1.0]; 5];
        let train = dataset(&rows, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let idx = NeighborIndex::build_with_ids(train.features().clone(), train.row_ids().to_vec(), Default::default()).unwrap();
        let plan = SamplingPlan { edge_fraction: 1.0, random_fraction: 0.2, ..SamplingPlan::new(Strategy::Mean, 2) };
        let s = sample_mean(&train, &idx, &plan).unwrap();
        assert_eq!(s.len(), 6);
        for (i, prov) in s.provenance.iter().enumerate() {
            if prov.tag == ProvenanceTag::EdgeMean {
                assert_eq!(prov.sources.len(), 5);
                assert_eq!(s.dataset.target()[i], 3.0);
                assert_eq!(s.dataset.features().row(i), &[1.0]);
            }
        }
    }

    #[test]
    fn mean_rows_stay_in_the_rectangle() {
        let train = grid(200);
        let idx = index_of(&train);
        let rect = hyper_rectangle(train.features()).unwrap();
        let s = sample_mean(&train, &idx, &SamplingPlan::new(Strategy::Mean, 1)).unwrap();
        assert!(s.dataset.features().rows_iter().all(|r| rect.contains(r)));
        assert!(s.provenance.iter().all(|p| p.sources.len() == if p.tag == ProvenanceTag::EdgeMean { 5 } else { 1 }));
    }

    #[test]
    fn mean_needs_k_rows() {
        let train = dataset(&[vec![0.0], vec![1.0], vec![2.0]], vec![0.0; 3]);
        let idx = index_of(&train);
        let plan = SamplingPlan { edge_fraction: 1.0, ..SamplingPlan::new(Strategy::Mean, 0) };
        assert!(matches!(sample_mean(&train, &idx, &plan), Err(Error::TooFewRows { .. })));
    }

    #[test]
    fn density_size_and_errors() {
        let train = grid(1000);
        let idx = index_of(&train);
        let s = sample_density(&train, &idx, &SamplingPlan::new(Strategy::Density, 8)).unwrap();
        assert_eq!(s.len(), 100);
        assert!(s.provenance.iter().all(|p| p.tag == ProvenanceTag::Density));

        let small = grid(100);
        let idx = index_of(&small);
        assert!(matches!(
            sample_density(&small, &idx, &SamplingPlan::new(Strategy::Density, 8)),
            Err(Error::TooFewRows { .. })
        ));
    }

    #[test]
    fn two_points_are_equally_likely() {
        let train = dataset(&[vec![0.0], vec![1.0]], vec![0.0, 1.0]);
        let idx = index_of(&train);
        let plan = SamplingPlan { k_density: 1, density_fraction: 1.0, ..SamplingPlan::new(Strategy::Density, 0) };
        let w = density_weights(&idx.self_density_scores(1).unwrap()).unwrap();
        assert_eq!(w, vec![0.5, 0.5]);
        let mut first = 0;
        for seed in 0..2000 {
            let s = sample_density(&train, &idx, &plan.with_seed(seed)).unwrap();
            assert_eq!(s.len(), 2);
            first += s.provenance.iter().filter(|p| p.sources[0] == RowId(0)).count();
        }
        // 4000 Bernoulli(0.5) draws
        assert!((first as f64 - 2000.0).abs() < 3.0 * 1000f64.sqrt());
    }

    #[test]
    fn wrong_strategy_rejected() {
        let train = grid(100);
        let idx = index_of(&train);
        assert!(sample_1point(&train, &idx, &SamplingPlan::new(Strategy::Mean, 0)).is_err());
    }

    #[test]
    fn draws_are_deterministic() {
        let train = grid(300);
        let idx = index_of(&train);
        for strategy in [Strategy::OnePoint, Strategy::Mean, Strategy::RandomBaseline] {
            let plan = SamplingPlan::new(strategy, 42);
            assert_eq!(draw_sample(&train, &idx, &plan).unwrap(), draw_sample(&train, &idx, &plan).unwrap());
        }
    }

    #[test]
    fn sampler_caches_scores() {
        let train = grid(500);
        let sampler = Sampler::new(&train, train.features().clone()).unwrap();
        let plan = SamplingPlan::new(Strategy::Density, 3);
        let a = sampler.draw(&plan).unwrap();
        let b = sample_density(&train, sampler.index(), &plan).unwrap();
        assert_eq!(a, b);
        assert!(sampler.density_scores(7).is_err());
    }

    #[test]
    fn provenance_sidecar() {
        let train = grid(50);
        let idx = index_of(&train);
        let plan = SamplingPlan { k_mean: 2, ..SamplingPlan::new(Strategy::Mean, 1) };
        let s = sample_mean(&train, &idx, &plan).unwrap();
        let mut buf = Vec::new();
        s.write_provenance(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("row_index,provenance,source_row_ids,seed"));
        let first = lines.next().unwrap();
        assert!(first.starts_with("0,edge-mean,"), "{first}");
        assert_eq!(first.split(',').nth(2).unwrap().split(';').count(), 2);
    }
}
