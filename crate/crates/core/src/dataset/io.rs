//! CSV loading and writing for [`Dataset`].
//!
//! The first line is a header. One column is the target, an optional column
//! holds ISO-8601 timestamps, and every remaining column is a feature (header
//! order preserved). Error messages refer to 1-based *data* rows, so "row 1"
//! is the first line after the header.

use std::path::Path;

use chrono::NaiveDateTime;
use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

use super::Dataset;

/// Accepted timestamp layouts, tried in order.
const TIMESTAMP_FORMATS: &[&str] = &[
    "%Y-%m-%dT%H:%M:%S%.f",
    "%Y-%m-%d %H:%M:%S%.f",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M",
];

fn parse_timestamp(value: &str, row: usize) -> Result<NaiveDateTime> {
    let value = value.trim();
    for fmt in TIMESTAMP_FORMATS {
        if let Ok(ts) = NaiveDateTime::parse_from_str(value, fmt) {
            return Ok(ts);
        }
    }
    // Date-only cells mean midnight.
    if let Ok(date) = chrono::NaiveDate::parse_from_str(value, "%Y-%m-%d") {
        if let Some(ts) = date.and_hms_opt(0, 0, 0) {
            return Ok(ts);
        }
    }
    Err(Error::BadTimestamp {
        row,
        value: value.to_string(),
    })
}

/// Loads a dataset from a CSV file.
///
/// `target_column` names the target; `timestamp_column`, when given, names a
/// column of ISO-8601 timestamps. All other columns are parsed as `f64`
/// features in header order. Rejects duplicate or missing header names,
/// non-numeric cells, and non-finite values, each with row/column context.
pub fn load_csv(
    path: impl AsRef<Path>,
    target_column: &str,
    timestamp_column: Option<&str>,
) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => {
                if let csv::ErrorKind::Io(io) = e.into_kind() {
                    Error::io(path, io)
                } else {
                    unreachable!()
                }
            }
            _ => Error::Csv(e),
        })?;

    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut seen = std::collections::HashSet::new();
    for name in &headers {
        if !seen.insert(name.as_str()) {
            return Err(Error::DuplicateColumn { name: name.clone() });
        }
    }
    let target_idx = headers
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| Error::MissingColumn {
            name: target_column.to_string(),
        })?;
    let timestamp_idx = match timestamp_column {
        Some(name) => Some(headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::MissingColumn {
                name: name.to_string(),
            }
        })?),
        None => None,
    };
    if timestamp_idx == Some(target_idx) {
        return Err(Error::invalid(format!(
            "column {target_column:?} cannot be both target and timestamp"
        )));
    }

    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&j| j != target_idx && Some(j) != timestamp_idx)
        .collect();
    let feature_names: Vec<String> = feature_cols.iter().map(|&j| headers[j].clone()).collect();

    let mut rows: Vec<f64> = Vec::new();
    let mut targets: Vec<f64> = Vec::new();
    let mut timestamps: Vec<NaiveDateTime> = Vec::new();
    let mut n_rows = 0usize;

    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1; // 1-based data row
        let parse = |j: usize| -> Result<f64> {
            let cell = record.get(j).unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
                row,
                column: headers[j].clone(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::non_finite(format!(
                    "column {:?}, data row {row}",
                    headers[j]
                )));
            }
            Ok(v)
        };
        if record.len() != headers.len() {
            return Err(Error::shape(format!(
                "data row {row} has {} fields, header has {}",
                record.len(),
                headers.len()
            )));
        }
        for &j in &feature_cols {
            rows.push(parse(j)?);
        }
        targets.push(parse(target_idx)?);
        if let Some(tj) = timestamp_idx {
            timestamps.push(parse_timestamp(record.get(tj).unwrap_or(""), row)?);
        }
        n_rows += 1;
    }

    let features = Array2::from_shape_vec((n_rows, feature_cols.len()), rows)
        .map_err(|e| Error::shape(e.to_string()))?;
    Dataset::new(
        features,
        Array1::from_vec(targets),
        feature_names,
        timestamp_idx.map(|_| timestamps),
    )
}

/// Loads a univariate series from a CSV file: the `value_column` values in
/// row order, plus parsed timestamps when `timestamp_column` is given.
/// Other columns are ignored. Feeds the time-series feature builders.
pub fn load_series_csv(
    path: impl AsRef<Path>,
    value_column: &str,
    timestamp_column: Option<&str>,
) -> Result<(Vec<f64>, Option<Vec<NaiveDateTime>>)> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => {
                if let csv::ErrorKind::Io(io) = e.into_kind() {
                    Error::io(path, io)
                } else {
                    unreachable!()
                }
            }
            _ => Error::Csv(e),
        })?;
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let value_idx = headers
        .iter()
        .position(|h| h == value_column)
        .ok_or_else(|| Error::MissingColumn {
            name: value_column.to_string(),
        })?;
    let timestamp_idx = match timestamp_column {
        Some(name) => Some(headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::MissingColumn {
                name: name.to_string(),
            }
        })?),
        None => None,
    };

    let mut values = Vec::new();
    let mut timestamps = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let cell = record.get(value_idx).unwrap_or("");
        let v: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
            row,
            column: value_column.to_string(),
            value: cell.to_string(),
        })?;
        if !v.is_finite() {
            return Err(Error::non_finite(format!(
                "column {value_column:?}, data row {row}"
            )));
        }
        values.push(v);
        if let Some(tj) = timestamp_idx {
            timestamps.push(parse_timestamp(record.get(tj).unwrap_or(""), row)?);
        }
    }
    if values.is_empty() {
        return Err(Error::invalid(format!(
            "series file {} has no data rows",
            path.display()
        )));
    }
    Ok((values, timestamp_idx.map(|_| timestamps)))
}

/// Writes a dataset to CSV: optional timestamp column first, then features,
/// then the target under `target_name`. Values round-trip exactly through
/// [`load_csv`] (shortest-representation float formatting).
pub fn write_csv(data: &Dataset, target_name: &str, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if data.feature_names().iter().any(|n| n == target_name) {
        return Err(Error::invalid(format!(
            "target name {target_name:?} collides with a feature column"
        )));
    }
    let mut writer = csv::Writer::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => {
            if let csv::ErrorKind::Io(io) = e.into_kind() {
                Error::io(path, io)
            } else {
                unreachable!()
            }
        }
        _ => Error::Csv(e),
    })?;

    let has_ts = data.timestamps().is_some();
    let mut header: Vec<String> = Vec::new();
    if has_ts {
        header.push("timestamp".to_string());
    }
    header.extend(data.feature_names().iter().cloned());
    header.push(target_name.to_string());
    writer.write_record(&header)?;

    for r in 0..data.n_rows() {
        let mut record: Vec<String> = Vec::with_capacity(header.len());
        if let Some(ts) = data.timestamps() {
            record.push(ts[r].format("%Y-%m-%dT%H:%M:%S").to_string());
        }
        for c in 0..data.n_features() {
            record.push(data.features()[[r, c]].to_string());
        }
        record.push(data.targets()[r].to_string());
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
