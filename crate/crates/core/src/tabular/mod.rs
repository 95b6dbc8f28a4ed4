//! Columnar datasets with mixed numeric and categorical features plus a
//! binary churn label.
//!
//! Cells are stored as `f64`. Numeric columns hold real values, categorical
//! columns hold integer codes indexing the schema's category list and the
//! label column holds `0.0` or `1.0`.

mod persist;
mod preprocess;
mod raw;
mod split;
mod stats;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use persist::{read_dataset, sidecar_path, write_dataset, DatasetMeta, PrivacyStamp};
pub use preprocess::{infer_schema, preprocess, PreprocessConfig};
pub use raw::RawTable;
pub use split::{split_indices, split_train_test};
pub use stats::{column_skewness, ColumnStats};

#[derive(Debug, Error)]
pub enum TabularError {
    #[error("table is empty")]
    EmptyTable,
    #[error("duplicate column name: {0}")]
    DuplicateColumn(String),
    #[error("target column not found: {0}")]
    MissingTarget(String),
    #[error("column {column} is not binary: unexpected value {value:?}")]
    NonBinaryLabel { column: String, value: String },
    #[error("schema must contain exactly one label column, found {0}")]
    LabelCount(usize),
    #[error("duplicate category {category:?} in column {column}")]
    DuplicateCategory { column: String, category: String },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("row {row} has {found} cells, expected {expected}")]
    RowWidth {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("invalid cell at row {row}, column {column}: {reason}")]
    InvalidCell {
        row: usize,
        column: String,
        reason: String,
    },
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("class {label} has {count} rows; at least 2 are required to split")]
    ClassTooSmall { label: u8, count: usize },
    #[error("skewness undefined: {0}")]
    UndefinedSkew(&'static str),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, TabularError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    BinaryLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
}

impl Column {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Numeric,
            categories: Vec::new(),
        }
    }

    pub fn categorical(name: impl Into<String>, categories: Vec<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Categorical,
            categories,
        }
    }

    pub fn label(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::BinaryLabel,
            categories: Vec::new(),
        }
    }
}

/// Ordered column list with exactly one binary label column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    columns: Vec<Column>,
}

impl Schema {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let labels = columns
            .iter()
            .filter(|c| c.kind == ColumnKind::BinaryLabel)
            .count();
        if labels != 1 {
            return Err(TabularError::LabelCount(labels));
        }
        let mut names = std::collections::HashSet::new();
        for c in &columns {
            if !names.insert(c.name.as_str()) {
                return Err(TabularError::DuplicateColumn(c.name.clone()));
            }
            let mut seen = std::collections::HashSet::new();
            for cat in &c.categories {
                if !seen.insert(cat.as_str()) {
                    return Err(TabularError::DuplicateCategory {
                        column: c.name.clone(),
                        category: cat.clone(),
                    });
                }
            }
        }
        Ok(Self { columns })
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn label_index(&self) -> usize {
        self.columns
            .iter()
            .position(|c| c.kind == ColumnKind::BinaryLabel)
            .expect("schema invariant: one label column")
    }

    pub fn label_name(&self) -> &str {
        &self.columns[self.label_index()].name
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Indices of every non-label column, in schema order.
    pub fn feature_indices(&self) -> Vec<usize> {
        let label = self.label_index();
        (0..self.columns.len()).filter(|&i| i != label).collect()
    }

    /// Same column names and kinds in the same order; category lists are not
    /// compared.
    pub fn is_compatible(&self, other: &Schema) -> bool {
        self.columns.len() == other.columns.len()
            && self
                .columns
                .iter()
                .zip(&other.columns)
                .all(|(a, b)| a.name == b.name && a.kind == b.kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum Provenance {
    Real,
    Synthetic { run_id: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    schema: Schema,
    rows: Vec<Vec<f64>>,
    provenance: Provenance,
}

impl Dataset {
    pub fn new(schema: Schema, rows: Vec<Vec<f64>>, provenance: Provenance) -> Result<Self> {
        let width = schema.len();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(TabularError::RowWidth {
                    row: r,
                    found: row.len(),
                    expected: width,
                });
            }
            for (col, &v) in schema.columns().iter().zip(row) {
                let bad = match col.kind {
                    ColumnKind::Numeric => (!v.is_finite()).then(|| "non-finite value".to_string()),
                    ColumnKind::Categorical => {
                        let ok = v.fract() == 0.0 && v >= 0.0 && (v as usize) < col.categories.len();
                        (!ok).then(|| format!("code {v} outside {} categories", col.categories.len()))
                    }
                    ColumnKind::BinaryLabel => {
                        (v != 0.0 && v != 1.0).then(|| format!("label {v} is not 0 or 1"))
                    }
                };
                if let Some(reason) = bad {
                    return Err(TabularError::InvalidCell {
                        row: r,
                        column: col.name.clone(),
                        reason,
                    });
                }
            }
        }
        Ok(Self {
            schema,
            rows,
            provenance,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, index: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[index]).collect()
    }

    pub fn labels(&self) -> Vec<u8> {
        let li = self.schema.label_index();
        self.rows.iter().map(|r| r[li] as u8).collect()
    }

    /// Feature vectors (all non-label columns, schema order) and labels.
    pub fn features_and_labels(&self) -> (Vec<Vec<f64>>, Vec<u8>) {
        let features = self.schema.feature_indices();
        let li = self.schema.label_index();
        self.rows
            .iter()
            .map(|r| (features.iter().map(|&i| r[i]).collect(), r[li] as u8))
            .unzip()
    }

    /// Rows selected by index, same schema and provenance.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// (churners, non-churners).
    pub fn class_counts(&self) -> (usize, usize) {
        let li = self.schema.label_index();
        let pos = self.rows.iter().filter(|r| r[li] == 1.0).count();
        (pos, self.rows.len() - pos)
    }

    /// Renders the dataset back into text cells: numerics with their
    /// shortest round-trip representation, categoricals by category name,
    /// labels as `0`/`1`.
    pub fn to_raw(&self) -> RawTable {
        let header = self.schema.columns().iter().map(|c| c.name.clone()).collect();
        let rows = self
            .rows
            .iter()
            .map(|row| {
                self.schema
                    .columns()
                    .iter()
                    .zip(row)
                    .map(|(c, &v)| {
                        Some(match c.kind {
                            ColumnKind::Numeric => format!("{v}"),
                            ColumnKind::Categorical => c.categories[v as usize].clone(),
                            ColumnKind::BinaryLabel => format!("{}", v as u8),
                        })
                    })
                    .collect()
            })
            .collect();
        RawTable { header, rows }
    }
}
