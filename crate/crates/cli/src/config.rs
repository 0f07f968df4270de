use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Result;
use rebalance_core::dataset::{IngestionConfig, SplitSpec};
use rebalance_core::evaluation::ExperimentConfig;
use rebalance_core::pca::{FittedOn, PcaScaling};
use rebalance_core::sampling::{SamplingPlan, Strategy};
use rebalance_core::synth::SynthSpec;
use serde::{Deserialize, Serialize};

use crate::Validation;

/// Where the data comes from: a CSV file, or the synthetic generator when
/// `input` is absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ingestion: Option<IngestionConfig>,
    /// JSON file holding an ingestion config, used when `ingestion` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ingestion_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PcaConfig {
    pub components: usize,
    pub scaling: PcaScaling,
    pub fit_on: FittedOn,
}

impl Default for PcaConfig {
    fn default() -> Self {
        PcaConfig { components: 4, scaling: PcaScaling::Standardize, fit_on: FittedOn::Test }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub input: Option<InputConfig>,
    pub synthetic: SynthSpec,
    pub output_dir: PathBuf,
    pub split: SplitSpec,
    pub strategies: Vec<SamplingPlan>,
    pub evaluation: ExperimentConfig,
    /// Draw a new train/test split for every iteration.
    pub resplit_per_iteration: bool,
    pub pca: PcaConfig,
    /// When set, overrides the generator, split, plan and experiment seeds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            synthetic: SynthSpec::benchmark(),
            output_dir: PathBuf::from("out"),
            split: SplitSpec::default(),
            strategies: [Strategy::OnePoint, Strategy::Mean, Strategy::Density]
                .into_iter()
                .map(|s| SamplingPlan::new(s, 0))
                .collect(),
            evaluation: ExperimentConfig::default(),
            resplit_per_iteration: false,
            pca: PcaConfig::default(),
            seed: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| Validation(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Validation(format!("config {}: {e}", path.display())).into())
    }

    /// Applies the global seed, resolves the ingestion file and validates
    /// every section.
    pub fn resolve(mut self) -> Result<RunConfig> {
        if let Some(seed) = self.seed {
            self.synthetic.seed = seed;
            self.split.seed = seed;
            self.evaluation.base_seed = seed;
            for plan in &mut self.strategies {
                plan.seed = seed;
            }
        }
        if let Some(input) = &mut self.input {
            if input.ingestion.is_none() {
                let file = input.ingestion_file.as_ref().ok_or_else(|| {
                    Validation("input needs either `ingestion` or `ingestion_file`".into())
                })?;
                let text = fs::read_to_string(file)
                    .map_err(|e| Validation(format!("cannot read ingestion file {}: {e}", file.display())))?;
                let ingestion: IngestionConfig = serde_json::from_str(&text)
                    .map_err(|e| Validation(format!("ingestion file {}: {e}", file.display())))?;
                input.ingestion = Some(ingestion);
            }
            if !input.path.exists() {
                return Err(Validation(format!("input file {} does not exist", input.path.display())).into());
            }
        } else {
            self.synthetic.validate()?;
        }
        self.split.validate()?;
        self.evaluation.validate()?;
        for plan in &self.strategies {
            plan.validate()?;
        }
        if self.pca.components == 0 {
            return Err(Validation("pca.components must be at least 1".into()).into());
        }
        Ok(self)
    }

    pub fn plans(&self) -> &[SamplingPlan] {
        &self.strategies
    }
}
