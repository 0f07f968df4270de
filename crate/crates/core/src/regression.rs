//! Ordinary least squares with an intercept.
//!
//! Covariates are centered, then `[1 | X_c]` is factored with Householder
//! QR. A column whose diagonal entry in `R` falls below `RANK_TOL` times
//! its own norm is linearly dependent on the columns before it.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

const RANK_TOL: f64 = 1e-10;
pub const INTERCEPT_NAME: &str = "(intercept)";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankHandling {
    /// Reject rank-deficient designs.
    #[default]
    Fail,
    /// Minimum-norm solution via SVD. Exploratory use only.
    MinimumNorm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub feature_names: Vec<String>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub training_n: usize,
}

pub fn fit_ols(train: &Dataset) -> Result<LinearModel> {
    fit_ols_with(train, RankHandling::Fail)
}

pub fn fit_ols_with(train: &Dataset, rank: RankHandling) -> Result<LinearModel> {
    train.ensure_complete()?;
    let (intercept, coefficients) = solve(train.features(), train.target(), train.feature_names(), rank)?;
    Ok(LinearModel {
        feature_names: train.feature_names().to_vec(),
        intercept,
        coefficients,
        training_n: train.n(),
    })
}

/// Least-squares `(intercept, coefficients)` for `y ~ 1 + X`.
pub fn solve(x: &Matrix, y: &[f64], names: &[String], rank: RankHandling) -> Result<(f64, Vec<f64>)> {
    let (n, p) = (x.nrows(), x.ncols());
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: y.len() });
    }
    if n == 0 {
        return Err(Error::Empty("no training rows"));
    }
    let means: Vec<f64> = (0..p).map(|j| x.column(j).iter().sum::<f64>() / n as f64).collect();
    // column-major centered design; column 0 is the intercept
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(p + 1);
    cols.push(vec![1.0; n]);
    for (j, m) in means.iter().enumerate() {
        cols.push((0..n).map(|i| x.get(i, j) - m).collect());
    }
    let beta = match rank {
        RankHandling::Fail => {
            if n < p + 1 {
                return Err(Error::invalid(format!("OLS needs at least {} rows, got {n}", p + 1)));
            }
            householder_solve(cols, y.to_vec(), names)?
        }
        RankHandling::MinimumNorm => min_norm_solve(&cols, y)?,
    };
    let slopes = beta[1..].to_vec();
    let intercept = beta[0] - slopes.iter().zip(&means).map(|(b, m)| b * m).sum::<f64>();
    if !intercept.is_finite() || slopes.iter().any(|b| !b.is_finite()) {
        return Err(Error::NonFinite("fitted coefficients"));
    }
    Ok((intercept, slopes))
}

fn householder_solve(mut cols: Vec<Vec<f64>>, mut rhs: Vec<f64>, names: &[String]) -> Result<Vec<f64>> {
    let q = cols.len();
    let norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let mut diag = vec![0.0; q];
    let mut dependent = Vec::new();
    // next pivot row; stays put when a dependent column is skipped
    let mut r = 0;
    for j in 0..q {
        let alpha = cols[j][r..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norms[j] == 0.0 || alpha <= RANK_TOL * norms[j] {
            dependent.push(j);
            continue;
        }
        let sign = if cols[j][r] >= 0.0 { 1.0 } else { -1.0 };
        let r_jj = -sign * alpha;
        let mut v = cols[j][r..].to_vec();
        v[0] -= r_jj;
        let v_norm2: f64 = v.iter().map(|a| a * a).sum();
        let reflect = |target: &mut [f64]| {
            let dot: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
            let scale = 2.0 * dot / v_norm2;
            for (t, a) in target.iter_mut().zip(&v) {
                *t -= scale * a;
            }
        };
        for col in cols.iter_mut().skip(j + 1) {
            reflect(&mut col[r..]);
        }
        reflect(&mut rhs[r..]);
        diag[j] = r_jj;
        r += 1;
    }
    if !dependent.is_empty() {
        let label = |j: usize| {
            if j == 0 {
                INTERCEPT_NAME.to_string()
            } else {
                names.get(j - 1).cloned().unwrap_or_else(|| format!("#{}", j - 1))
            }
        };
        return Err(Error::RankDeficient(dependent.into_iter().map(label).collect()));
    }
    let mut beta = vec![0.0; q];
    for j in (0..q).rev() {
        let mut acc = rhs[j];
        for k in j + 1..q {
            acc -= cols[k][j] * beta[k];
        }
        beta[j] = acc / diag[j];
    }
    Ok(beta)
}

fn min_norm_solve(cols: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let n = y.len();
    let a = nalgebra::DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
    let b = nalgebra::DVector::from_column_slice(y);
    let svd = a.svd(true, true);
    let eps = svd.singular_values.max() * RANK_TOL;
    let sol = svd.solve(&b, eps).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(sol.iter().copied().collect())
}

impl LinearModel {
    pub fn p(&self) -> usize {
        self.coefficients.len()
    }

    /// `intercept + x · coefficients` for each row.
    pub fn predict(&self, features: &Matrix) -> Result<Vec<f64>> {
        if features.ncols() != self.p() {
            return Err(Error::DimensionMismatch { expected: self.p(), actual: features.ncols() });
        }
        Ok(features
            .rows_iter()
            .map(|row| self.intercept + row.iter().zip(&self.coefficients).map(|(x, b)| x * b).sum::<f64>())
            .collect())
    }

    /// Like [`LinearModel::predict`], also checking column names and order.
    pub fn predict_dataset(&self, dataset: &Dataset) -> Result<Vec<f64>> {
        if dataset.feature_names() != self.feature_names.as_slice() {
            return Err(Error::NameMismatch {
                expected: self.feature_names.clone(),
                actual: dataset.feature_names().to_vec(),
            });
        }
        self.predict(dataset.features())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: LinearModel = serde_json::from_str(text)?;
        if model.feature_names.len() != model.coefficients.len() {
            return Err(Error::DimensionMismatch {
                expected: model.feature_names.len(),
                actual: model.coefficients.len(),
            });
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}
