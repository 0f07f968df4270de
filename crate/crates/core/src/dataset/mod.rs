//! Tabular regression data: ingestion, column filtering, standardization and
//! holdout splitting.

mod filter;
mod io;
mod split;
mod standardize;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use filter::{filter_columns, DropReason, DroppedColumn, FilterReport};
pub use io::{load_csv, read_csv, write_csv, write_csv_to, IngestionConfig};
pub use split::{train_test_split, SplitMode, SplitSpec};
pub use standardize::{apply_standardization, fit_standardization, StandardizationParams};

/// Opaque row identifier, stable across filtering, splitting and sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RowId(pub u64);

impl fmt::Display for RowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// An `n × p` covariate table with one numeric target.
///
/// Feature cells may hold `NaN` only as the missing-value marker produced by
/// ingestion; [`filter_columns`] removes such columns and everything
/// downstream requires [`Dataset::is_complete`].
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    target: Vec<f64>,
    feature_names: Vec<String>,
    target_name: String,
    row_ids: Vec<RowId>,
    batch_labels: Option<Vec<i64>>,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        target: Vec<f64>,
        feature_names: Vec<String>,
        target_name: impl Into<String>,
        row_ids: Vec<RowId>,
        batch_labels: Option<Vec<i64>>,
    ) -> Result<Self> {
        let n = features.nrows();
        if n == 0 {
            return Err(Error::Empty("dataset has no rows"));
        }
        if features.ncols() == 0 {
            return Err(Error::NoUsableColumns);
        }
        for len in [target.len(), row_ids.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, actual: len });
            }
        }
        if let Some(labels) = &batch_labels {
            if labels.len() != n {
                return Err(Error::DimensionMismatch { expected: n, actual: labels.len() });
            }
        }
        if feature_names.len() != features.ncols() {
            return Err(Error::DimensionMismatch {
                expected: features.ncols(),
                actual: feature_names.len(),
            });
        }
        let mut seen = HashSet::with_capacity(feature_names.len());
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        let mut ids = HashSet::with_capacity(n);
        for id in &row_ids {
            if !ids.insert(*id) {
                return Err(Error::DuplicateRowId(id.0));
            }
        }
        if target.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("target"));
        }
        if features.as_slice().iter().any(|v| v.is_infinite()) {
            return Err(Error::NonFinite("features"));
        }
        Ok(Dataset {
            features,
            target,
            feature_names,
            target_name: target_name.into(),
            row_ids,
            batch_labels,
        })
    }

    /// Convenience constructor with row ids `0..n` and generated names
    /// `x1..xp`, target `y`.
    pub fn from_features(features: Matrix, target: Vec<f64>) -> Result<Self> {
        let names = (1..=features.ncols()).map(|j| format!("x{j}")).collect();
        let ids = (0..features.nrows() as u64).map(RowId).collect();
        Dataset::new(features, target, names, "y", ids, None)
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn p(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn row_ids(&self) -> &[RowId] {
        &self.row_ids
    }

    pub fn batch_labels(&self) -> Option<&[i64]> {
        self.batch_labels.as_deref()
    }

    /// True when no feature cell is missing.
    pub fn is_complete(&self) -> bool {
        self.features.all_finite()
    }

    pub(crate) fn ensure_complete(&self) -> Result<()> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(Error::NonFinite("features (missing values present; run filter_columns)"))
        }
    }

    /// Rows at the given positions, in order. Positions must be distinct.
    pub fn subset(&self, positions: &[usize]) -> Result<Dataset> {
        Dataset::new(
            self.features.select_rows(positions),
            positions.iter().map(|&i| self.target[i]).collect(),
            self.feature_names.clone(),
            self.target_name.clone(),
            positions.iter().map(|&i| self.row_ids[i]).collect(),
            self.batch_labels
                .as_ref()
                .map(|b| positions.iter().map(|&i| b[i]).collect()),
        )
    }

    /// Same rows and metadata with the features replaced.
    pub fn with_features(&self, features: Matrix) -> Result<Dataset> {
        if features.nrows() != self.n() || features.ncols() != self.p() {
            return Err(Error::DimensionMismatch {
                expected: self.p(),
                actual: features.ncols(),
            });
        }
        Ok(Dataset {
            features,
            ..self.clone()
        })
    }

    pub(crate) fn with_columns(&self, columns: &[usize]) -> Result<Dataset> {
        Dataset::new(
            self.features.select_columns(columns),
            self.target.clone(),
            columns.iter().map(|&j| self.feature_names[j].clone()).collect(),
            self.target_name.clone(),
            self.row_ids.clone(),
            self.batch_labels.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> (Matrix, Vec<f64>) {
        (Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap(), vec![0.5, 1.5])
    }

    #[test]
    fn rejects_duplicate_ids_and_names() {
        let (x, y) = tiny();
        let err = Dataset::new(
            x.clone(),
            y.clone(),
            vec!["a".into(), "b".into()],
            "y",
            vec![RowId(1), RowId(1)],
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateRowId(1)));

        let err = Dataset::new(x, y, vec!["a".into(), "a".into()], "y", vec![RowId(0), RowId(1)], None)
            .unwrap_err();
        assert!(matches!(err, Error::DuplicateColumn(_)));
    }

    #[test]
    fn rejects_non_finite_target() {
        let (x, _) = tiny();
        let err = Dataset::from_features(x, vec![1.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::NonFinite("target")));
    }

    #[test]
    fn subset_keeps_metadata() {
        let (x, y) = tiny();
        let mut d = Dataset::from_features(x, y).unwrap();
        d.batch_labels = Some(vec![7, 9]);
        let s = d.subset(&[1]).unwrap();
        assert_eq!(s.row_ids(), &[RowId(1)]);
        assert_eq!(s.batch_labels(), Some(&[9][..]));
        assert_eq!(s.target(), &[1.5]);
    }
}
