//! CSV panel ingestion with precise error locations.

use std::collections::HashSet;
use std::path::Path;

use chrono::NaiveDate;
use sha2::{Digest, Sha256};
use tailcor::Panel;

use crate::args::NaPolicy;
use crate::error::{CliError, Result};

pub struct LoadedPanel {
    pub panel: Panel,
    pub dates: Option<Vec<NaiveDate>>,
    pub dropped_rows: usize,
    /// Hex SHA-256 of the raw file bytes, recorded in the manifest.
    pub sha256: String,
}

fn is_na(cell: &str) -> bool {
    matches!(
        cell.to_ascii_lowercase().as_str(),
        "" | "na" | "nan" | "null"
    )
}

pub fn load_panel(path: &Path, date_column: Option<&str>, na: NaPolicy) -> Result<LoadedPanel> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let sha256 = hex::encode(Sha256::digest(&bytes));

    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(bytes.as_slice());
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() {
        return Err(CliError::Schema("empty header row".into()));
    }
    let mut seen = HashSet::new();
    for h in &headers {
        if !seen.insert(h.as_str()) {
            return Err(CliError::Schema(format!("duplicate column label {h:?}")));
        }
    }

    let date_idx = match date_column {
        Some(name) => Some(headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Schema(format!("date column {name:?} not found in the header"))
        })?),
        None => None,
    };
    let labels: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != date_idx)
        .map(|(_, h)| h.clone())
        .collect();
    if labels.is_empty() {
        return Err(CliError::Schema("no value columns besides the date".into()));
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut dropped = 0usize;
    let mut row_no = 0usize;

    for record in rdr.records() {
        let record = record.map_err(|e| CliError::Parse {
            line: e
                .position()
                .map(|p| p.line())
                .unwrap_or_default(),
            message: e.to_string(),
        })?;
        row_no += 1;
        let line = record.position().map(|p| p.line()).unwrap_or_default();
        if record.len() != headers.len() {
            return Err(CliError::Parse {
                line,
                message: format!(
                    "expected {} fields, found {}",
                    headers.len(),
                    record.len()
                ),
            });
        }

        let date = match date_idx {
            Some(i) => {
                let cell = record[i].trim();
                Some(cell.parse::<NaiveDate>().map_err(|_| CliError::Data {
                    row: row_no,
                    column: headers[i].clone(),
                    message: format!("{cell:?} is not an ISO-8601 date"),
                })?)
            }
            None => None,
        };

        let mut values = Vec::with_capacity(labels.len());
        let mut missing = false;
        for (i, cell) in record.iter().enumerate() {
            if Some(i) == date_idx {
                continue;
            }
            let cell = cell.trim();
            if is_na(cell) {
                match na {
                    NaPolicy::Error => {
                        return Err(CliError::Data {
                            row: row_no,
                            column: headers[i].clone(),
                            message: "missing value".into(),
                        })
                    }
                    NaPolicy::Drop => {
                        missing = true;
                        break;
                    }
                }
            }
            let v: f64 = cell.parse().map_err(|_| CliError::Data {
                row: row_no,
                column: headers[i].clone(),
                message: format!("{cell:?} is not a number"),
            })?;
            if !v.is_finite() {
                return Err(CliError::Data {
                    row: row_no,
                    column: headers[i].clone(),
                    message: format!("non-finite value {v}"),
                });
            }
            values.push(v);
        }
        if missing {
            dropped += 1;
            continue;
        }
        if let Some(d) = date {
            if let Some(prev) = dates.last() {
                if d <= *prev {
                    return Err(CliError::Data {
                        row: row_no,
                        column: headers[date_idx.expect("date present")].clone(),
                        message: format!("dates must be strictly increasing, {d} follows {prev}"),
                    });
                }
            }
            dates.push(d);
        }
        rows.push(values);
    }

    if rows.is_empty() {
        return Err(CliError::Schema("no usable data rows".into()));
    }
    let t = rows.len();
    let mut columns = vec![Vec::with_capacity(t); labels.len()];
    for row in rows {
        for (j, v) in row.into_iter().enumerate() {
            columns[j].push(v);
        }
    }

    Ok(LoadedPanel {
        panel: Panel::new(labels, columns)?,
        dates: date_idx.map(|_| dates),
        dropped_rows: dropped,
        sha256,
    })
}
