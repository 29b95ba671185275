//! A rectangular panel of aligned series.

use crate::error::{Error, Result};

/// N labeled series of equal length, stored column-wise. Construction
/// validates shape, label uniqueness, and finiteness once so estimators
/// can trust the data afterwards.
#[derive(Debug, Clone)]
pub struct Panel {
    labels: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Panel {
    pub fn new(labels: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if labels.len() != columns.len() {
            return Err(Error::PanelShape(format!(
                "{} labels for {} columns",
                labels.len(),
                columns.len()
            )));
        }
        if columns.is_empty() {
            return Err(Error::PanelShape("panel has no series".into()));
        }
        let t = columns[0].len();
        if t == 0 {
            return Err(Error::PanelShape("panel has no rows".into()));
        }
        for (label, col) in labels.iter().zip(&columns) {
            if col.len() != t {
                return Err(Error::PanelShape(format!(
                    "column {label} has length {} but the panel has {t} rows",
                    col.len()
                )));
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "non-finite value in column {label} at row {i}"
                )));
            }
        }
        for i in 0..labels.len() {
            if labels[i + 1..].contains(&labels[i]) {
                return Err(Error::PanelShape(format!("duplicate label {}", labels[i])));
            }
        }
        Ok(Self { labels, columns })
    }

    /// Convenience constructor with generated labels x1, x2, ...
    pub fn unlabeled(columns: Vec<Vec<f64>>) -> Result<Self> {
        let labels = (1..=columns.len()).map(|i| format!("x{i}")).collect();
        Self::new(labels, columns)
    }

    /// Number of rows (observations per series).
    pub fn len(&self) -> usize {
        self.columns[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of series.
    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    /// A copy restricted to rows [start, start + len).
    pub fn window(&self, start: usize, len: usize) -> Result<Panel> {
        if start + len > self.len() {
            return Err(Error::InvalidInput(format!(
                "window [{start}, {}) exceeds panel length {}",
                start + len,
                self.len()
            )));
        }
        let columns = self
            .columns
            .iter()
            .map(|c| c[start..start + len].to_vec())
            .collect();
        Ok(Panel {
            labels: self.labels.clone(),
            columns,
        })
    }
}
