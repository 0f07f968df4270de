use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    #[default]
    RowRandom,
    BatchGrouped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
    pub mode: SplitMode,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { test_fraction: 0.2, seed: 0, mode: SplitMode::RowRandom }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "test_fraction must lie strictly between 0 and 1, got {}",
                self.test_fraction
            )));
        }
        Ok(())
    }
}

/// Returns `(train, test)`. Both sides keep the original row order.
///
/// Row-random mode puts exactly `round(test_fraction * n)` rows in the test
/// side. Batch-grouped mode adds whole batches in shuffled order until the
/// test side reaches that target, so its size may overshoot.
pub fn train_test_split(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    spec.validate()?;
    let n = dataset.n();
    let target = (spec.test_fraction * n as f64).round() as usize;
    if target == 0 || target >= n {
        return Err(Error::invalid(format!(
            "test_fraction {} on {n} rows leaves an empty side",
            spec.test_fraction
        )));
    }
    let mut rng = seeded(spec.seed);
    let mut in_test = vec![false; n];
    match spec.mode {
        SplitMode::RowRandom => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            for &i in &order[..target] {
                in_test[i] = true;
            }
        }
        SplitMode::BatchGrouped => {
            let labels = dataset
                .batch_labels()
                .ok_or_else(|| Error::invalid("batch-grouped split requires batch labels"))?;
            let mut batches: Vec<i64> = labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
            batches.shuffle(&mut rng);
            let mut chosen = BTreeSet::new();
            let mut count = 0;
            for b in batches {
                if count >= target {
                    break;
                }
                count += labels.iter().filter(|&&l| l == b).count();
                chosen.insert(b);
            }
            if count == n {
                return Err(Error::invalid("batch-grouped split leaves no training batches"));
            }
            for (flag, label) in in_test.iter_mut().zip(labels) {
                *flag = chosen.contains(label);
            }
        }
    }
    let (test, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| in_test[i]);
    Ok((dataset.subset(&train)?, dataset.subset(&test)?))
}
