use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Per-column z-score parameters. Standard deviations use divisor `n - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub means: Vec<f64>,
    pub standard_deviations: Vec<f64>,
}

impl StandardizationParams {
    pub fn identity(p: usize) -> Self {
        StandardizationParams {
            means: vec![0.0; p],
            standard_deviations: vec![1.0; p],
        }
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn fit(features: &Matrix, names: &[String]) -> Result<Self> {
        let (n, p) = (features.nrows(), features.ncols());
        if n < 2 {
            return Err(Error::invalid("standardization needs at least two rows"));
        }
        let mut means = vec![0.0; p];
        for row in features.rows_iter() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n as f64);
        let mut sds = vec![0.0; p];
        for row in features.rows_iter() {
            for ((s, v), m) in sds.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        for (j, s) in sds.iter_mut().enumerate() {
            *s = (*s / (n - 1) as f64).sqrt();
            if s.is_nan() || *s <= 0.0 {
                let name = names.get(j).cloned().unwrap_or_else(|| format!("#{j}"));
                return Err(Error::ZeroVariance(name));
            }
        }
        Ok(StandardizationParams { means, standard_deviations: sds })
    }

    pub fn transform(&self, features: &Matrix) -> Result<Matrix> {
        self.check(features.ncols())?;
        let mut out = features.clone();
        for i in 0..out.nrows() {
            for ((v, m), s) in out.row_mut(i).iter_mut().zip(&self.means).zip(&self.standard_deviations) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check(row.len())?;
        Ok(row
            .iter()
            .zip(&self.means)
            .zip(&self.standard_deviations)
            .map(|((v, m), s)| (v - m) / s)
            .collect())
    }

    pub fn inverse_transform(&self, features: &Matrix) -> Result<Matrix> {
        self.check(features.ncols())?;
        let mut out = features.clone();
        for i in 0..out.nrows() {
            for ((v, m), s) in out.row_mut(i).iter_mut().zip(&self.means).zip(&self.standard_deviations) {
                *v = *v * s + m;
            }
        }
        Ok(out)
    }

    fn check(&self, p: usize) -> Result<()> {
        if p != self.len() {
            Err(Error::DimensionMismatch { expected: self.len(), actual: p })
        } else {
            Ok(())
        }
    }
}

pub fn fit_standardization(dataset: &Dataset) -> Result<StandardizationParams> {
    dataset.ensure_complete()?;
    StandardizationParams::fit(dataset.features(), dataset.feature_names())
}

/// Rescales features only; target, ids and batch labels pass through.
pub fn apply_standardization(dataset: &Dataset, params: &StandardizationParams) -> Result<Dataset> {
    dataset.with_features(params.transform(dataset.features())?)
}
