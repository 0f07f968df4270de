use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, RowId};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Which CSV columns become covariates, target and metadata.
///
/// When `selected_columns` is absent every column other than the target,
/// id, batch and excluded columns is taken as a covariate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestionConfig {
    pub target_column: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_columns: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exclude_columns: Vec<String>,
    /// Drops every column whose name starts with one of these prefixes,
    /// e.g. spectral channels.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exclude_prefixes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id_column: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_column: Option<String>,
}

impl IngestionConfig {
    pub fn new(target_column: impl Into<String>) -> Self {
        IngestionConfig {
            target_column: target_column.into(),
            selected_columns: None,
            exclude_columns: Vec::new(),
            exclude_prefixes: Vec::new(),
            id_column: None,
            batch_column: None,
        }
    }

    /// Config matching the layout produced by [`write_csv`].
    pub fn for_written(dataset: &Dataset) -> Self {
        IngestionConfig {
            id_column: Some(ID_COLUMN.to_string()),
            batch_column: dataset.batch_labels().map(|_| BATCH_COLUMN.to_string()),
            ..IngestionConfig::new(dataset.target_name())
        }
    }

    fn is_excluded(&self, name: &str) -> bool {
        self.exclude_columns.iter().any(|c| c == name)
            || self.exclude_prefixes.iter().any(|p| name.starts_with(p.as_str()))
    }
}

pub(crate) const ID_COLUMN: &str = "row_id";
pub(crate) const BATCH_COLUMN: &str = "batch";

pub fn load_csv(path: impl AsRef<Path>, config: &IngestionConfig) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, config)
}

/// Parses a CSV stream. Empty cells are missing values (`NaN`) in
/// covariates and an error in the target, id and batch columns.
pub fn read_csv<R: Read>(reader: R, config: &IngestionConfig) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();

    let mut seen = HashSet::new();
    for name in &header {
        if !seen.insert(name.as_str()) {
            return Err(Error::DuplicateColumn(name.clone()));
        }
    }
    let position = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };

    let target_col = position(&config.target_column)?;
    let id_col = config.id_column.as_deref().map(position).transpose()?;
    let batch_col = config.batch_column.as_deref().map(position).transpose()?;
    let reserved = |j: usize| j == target_col || Some(j) == id_col || Some(j) == batch_col;

    let feature_cols: Vec<usize> = match &config.selected_columns {
        Some(selected) => {
            let mut cols = Vec::with_capacity(selected.len());
            for name in selected {
                let j = position(name)?;
                if reserved(j) {
                    return Err(Error::invalid(format!(
                        "column `{name}` cannot be both a covariate and the target/id/batch column"
                    )));
                }
                if !config.is_excluded(name) {
                    cols.push(j);
                }
            }
            cols
        }
        None => (0..header.len())
            .filter(|&j| !reserved(j) && !config.is_excluded(&header[j]))
            .collect(),
    };
    if feature_cols.is_empty() {
        return Err(Error::NoUsableColumns);
    }

    let mut data = Vec::new();
    let mut target = Vec::new();
    let mut ids = Vec::new();
    let mut batches = batch_col.map(|_| Vec::new());
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(i + 2, |p| p.line() as usize);
        let cell = |j: usize| record.get(j).unwrap_or("").trim();
        for &j in &feature_cols {
            data.push(parse_optional(cell(j), line, &header[j])?.unwrap_or(f64::NAN));
        }
        target.push(
            parse_optional(cell(target_col), line, &header[target_col])?.ok_or_else(|| {
                Error::MissingValue { row: line, column: header[target_col].clone() }
            })?,
        );
        ids.push(match id_col {
            Some(j) => RowId(parse_integer::<u64>(cell(j), line, &header[j])?),
            None => RowId(i as u64),
        });
        if let (Some(j), Some(b)) = (batch_col, batches.as_mut()) {
            b.push(parse_integer::<i64>(cell(j), line, &header[j])?);
        }
    }
    if target.is_empty() {
        return Err(Error::Empty("csv has no data rows"));
    }
    let features = Matrix::from_row_major(target.len(), feature_cols.len(), data)?;
    Dataset::new(
        features,
        target,
        feature_cols.iter().map(|&j| header[j].clone()).collect(),
        header[target_col].clone(),
        ids,
        batches,
    )
}

fn parse_optional(raw: &str, row: usize, column: &str) -> Result<Option<f64>> {
    if raw.is_empty() {
        return Ok(None);
    }
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::Parse {
            row,
            column: column.to_string(),
            value: raw.to_string(),
        }),
    }
}

fn parse_integer<T: std::str::FromStr>(raw: &str, row: usize, column: &str) -> Result<T> {
    if raw.is_empty() {
        return Err(Error::MissingValue { row, column: column.to_string() });
    }
    raw.parse::<T>().map_err(|_| Error::Parse {
        row,
        column: column.to_string(),
        value: raw.to_string(),
    })
}

/// Writes `row_id, [batch,] features..., target`. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(dataset, file)
}

pub fn write_csv_to<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec![ID_COLUMN.to_string()];
    if dataset.batch_labels().is_some() {
        header.push(BATCH_COLUMN.to_string());
    }
    header.extend(dataset.feature_names().iter().cloned());
    header.push(dataset.target_name().to_string());
    wtr.write_record(&header)?;

    let mut record = Vec::with_capacity(header.len());
    for i in 0..dataset.n() {
        record.clear();
        record.push(dataset.row_ids()[i].to_string());
        if let Some(b) = dataset.batch_labels() {
            record.push(b[i].to_string());
        }
        record.extend(dataset.features().row(i).iter().map(|v| format_value(*v)));
        record.push(format_value(dataset.target()[i]));
        wtr.write_record(&record)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

fn format_value(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}
