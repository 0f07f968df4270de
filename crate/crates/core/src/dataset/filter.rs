use serde::Serialize;

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropReason {
    MissingValues,
    NoVariation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DroppedColumn {
    pub name: String,
    pub reason: DropReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FilterReport {
    pub dropped: Vec<DroppedColumn>,
}

impl FilterReport {
    pub fn is_empty(&self) -> bool {
        self.dropped.is_empty()
    }
}

/// Drops columns holding any missing value, then columns with zero sample
/// variance.
pub fn filter_columns(dataset: &Dataset) -> Result<(Dataset, FilterReport)> {
    let x = dataset.features();
    let mut keep = Vec::with_capacity(dataset.p());
    let mut report = FilterReport::default();
    for (j, name) in dataset.feature_names().iter().enumerate() {
        let column = x.column(j);
        let reason = if column.iter().any(|v| v.is_nan()) {
            Some(DropReason::MissingValues)
        } else if column.iter().all(|&v| v == column[0]) {
            Some(DropReason::NoVariation)
        } else {
            None
        };
        match reason {
            Some(reason) => report.dropped.push(DroppedColumn { name: name.clone(), reason }),
            None => keep.push(j),
        }
    }
    if keep.is_empty() {
        return Err(Error::NoUsableColumns);
    }
    Ok((dataset.with_columns(&keep)?, report))
}
