//! Synthetic imbalanced regression data: a dense Gaussian cluster at the
//! origin surrounded by a sparse spherical shell.
//!
//! Targets are `intercept + <coefficients, x> + curvature * |x|^2 + noise`.
//! With `curvature = 0` the linear model is correctly specified; a positive
//! curvature makes a single linear fit trade accuracy between the cluster
//! and the shell, which is the regime where rebalancing matters.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, RowId};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{fraction_count, seeded};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub n: usize,
    pub p: usize,
    pub cluster_fraction: f64,
    pub cluster_spread: f64,
    pub shell_radius_range: (f64, f64),
    /// Length `p`. Empty means `1, -1, 1, ...` scaled by `1 / j`.
    pub true_coefficients: Vec<f64>,
    pub true_intercept: f64,
    pub noise_sd: f64,
    pub curvature: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n: 5_000,
            p: 5,
            cluster_fraction: 0.95,
            cluster_spread: 1.0,
            shell_radius_range: (5.0, 7.0),
            true_coefficients: Vec::new(),
            true_intercept: 10.0,
            noise_sd: 1.0,
            curvature: 0.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    /// The benchmark used by the acceptance suite and the bundled configs.
    pub fn benchmark() -> Self {
        SynthSpec { noise_sd: 1.5, curvature: 0.1, seed: 2024, ..SynthSpec::default() }
    }

    pub fn coefficients(&self) -> Vec<f64> {
        if self.true_coefficients.is_empty() {
            (1..=self.p).map(|j| if j % 2 == 1 { 1.0 } else { -1.0 } / j as f64).collect()
        } else {
            self.true_coefficients.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (r_min, r_max) = self.shell_radius_range;
        let checks = [
            (self.n >= 2, "n must be at least 2".to_string()),
            (self.p >= 1, "p must be at least 1".to_string()),
            (
                self.cluster_fraction > 0.0 && self.cluster_fraction <= 1.0,
                format!("cluster_fraction must lie in (0, 1], got {}", self.cluster_fraction),
            ),
            (self.cluster_spread > 0.0, "cluster_spread must be positive".to_string()),
            (
                r_min > 3.0 * self.cluster_spread,
                format!("shell r_min {r_min} must exceed 3 * cluster_spread"),
            ),
            (r_min < r_max, format!("shell radius range ({r_min}, {r_max}) is empty")),
            (self.noise_sd >= 0.0 && self.noise_sd.is_finite(), "noise_sd must be non-negative".to_string()),
            (self.curvature.is_finite() && self.true_intercept.is_finite(), "non-finite target parameters".to_string()),
            (
                self.true_coefficients.is_empty() || self.true_coefficients.len() == self.p,
                format!("expected {} coefficients, got {}", self.p, self.true_coefficients.len()),
            ),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::invalid(msg));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Cluster,
    Shell,
}

impl Region {
    pub fn label(self) -> &'static str {
        match self {
            Region::Cluster => "cluster",
            Region::Shell => "shell",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub dataset: Dataset,
    pub regions: Vec<Region>,
    pub spec: SynthSpec,
}

impl SynthDataset {
    pub fn shell_count(&self) -> usize {
        self.regions.iter().filter(|r| **r == Region::Shell).count()
    }

    /// `row_id,region`.
    pub fn write_labels<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["row_id", "region"])?;
        for (id, region) in self.dataset.row_ids().iter().zip(&self.regions) {
            wtr.write_record([id.to_string(), region.label().to_string()])?;
        }
        wtr.flush().map_err(|e| Error::io("<label output>", e))?;
        Ok(())
    }
}

fn shell_point<R: Rng>(rng: &mut R, p: usize, r_min: f64, r_max: f64) -> Vec<f64> {
    let mut dir: Vec<f64> = (0..p).map(|_| StandardNormal.sample(rng)).collect();
    let mut norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    while norm == 0.0 {
        dir = (0..p).map(|_| StandardNormal.sample(rng)).collect();
        norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    // radius uniform in volume between the two spheres
    let u: f64 = rng.random();
    let pf = p as f64;
    let radius = (r_min.powf(pf) + u * (r_max.powf(pf) - r_min.powf(pf))).powf(1.0 / pf).clamp(r_min, r_max);
    dir.into_iter().map(|v| v / norm * radius).collect()
}

pub fn generate(spec: &SynthSpec) -> Result<SynthDataset> {
    spec.validate()?;
    let mut rng = seeded(spec.seed);
    let (n, p) = (spec.n, spec.p);
    let n_cluster = fraction_count(spec.cluster_fraction, n);
    let coefficients = spec.coefficients();
    let cluster = Normal::new(0.0, spec.cluster_spread).map_err(|e| Error::invalid(e.to_string()))?;
    let noise = Normal::new(0.0, spec.noise_sd).map_err(|e| Error::invalid(e.to_string()))?;

    let mut regions: Vec<Region> = (0..n).map(|i| if i < n_cluster { Region::Cluster } else { Region::Shell }).collect();
    regions.shuffle(&mut rng);

    let (r_min, r_max) = spec.shell_radius_range;
    let mut rows = Vec::with_capacity(n);
    let mut target = Vec::with_capacity(n);
    for region in &regions {
        let x: Vec<f64> = match region {
            Region::Cluster => (0..p).map(|_| cluster.sample(&mut rng)).collect(),
            Region::Shell => shell_point(&mut rng, p, r_min, r_max),
        };
        let linear: f64 = x.iter().zip(&coefficients).map(|(a, b)| a * b).sum();
        let squared: f64 = x.iter().map(|v| v * v).sum();
        target.push(spec.true_intercept + linear + spec.curvature * squared + noise.sample(&mut rng));
        rows.push(x);
    }
    let names = (1..=p).map(|j| format!("x{j}")).collect();
    let dataset = Dataset::new(Matrix::from_rows(&rows)?, target, names, "y", (0..n as u64).map(RowId).collect(), None)?;
    Ok(SynthDataset { dataset, regions, spec: spec.clone() })
}
