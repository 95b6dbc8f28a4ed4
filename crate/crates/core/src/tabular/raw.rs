use std::io::Read;
use std::path::Path;

use super::{Result, TabularError};

/// Text grid read from CSV. Cells are trimmed; an empty cell is `None`
/// (missing).
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<String>>>,
}

impl RawTable {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(file)
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record?;
            rows.push(record.iter().map(cell).collect());
        }
        Self::from_parts(header, rows)
    }

    /// Builds a table from literal cells (empty strings are missing).
    pub fn from_grid(header: &[&str], rows: &[Vec<&str>]) -> Result<Self> {
        Self::from_parts(
            header.iter().map(|h| h.to_string()).collect(),
            rows.iter().map(|r| r.iter().map(|c| cell(c)).collect()).collect(),
        )
    }

    fn from_parts(header: Vec<String>, rows: Vec<Vec<Option<String>>>) -> Result<Self> {
        if header.is_empty() || rows.is_empty() {
            return Err(TabularError::EmptyTable);
        }
        let mut seen = std::collections::HashSet::new();
        for h in &header {
            if !seen.insert(h.as_str()) {
                return Err(TabularError::DuplicateColumn(h.clone()));
            }
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != header.len() {
                return Err(TabularError::RowWidth {
                    row: i,
                    found: r.len(),
                    expected: header.len(),
                });
            }
        }
        Ok(Self { header, rows })
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.as_deref().unwrap_or("")))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn cell(s: &str) -> Option<String> {
    let t = s.trim();
    (!t.is_empty()).then(|| t.to_string())
}
