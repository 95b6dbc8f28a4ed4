//! Dataset files: a CSV of encoded cells plus a JSON sidecar.
//!
//! For `data.csv` the sidecar is `data.csv.schema.json`:
//!
//! ```json
//! {
//!   "columns": [{"name": "tenure", "kind": "numeric"},
//!               {"name": "contract", "kind": "categorical", "categories": ["Month-to-month", "One year"]},
//!               {"name": "churn", "kind": "binary-label"}],
//!   "provenance": {"source": "synthetic", "run_id": "run-03"},
//!   "seed": 1234,
//!   "privacy": {"epsilon": 9.98, "delta": 1e-5, "accountant": "subsampled"}
//! }
//! ```
//!
//! Categorical cells in the CSV are integer codes into `categories`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Column, Dataset, Provenance, Result, Schema, TabularError};

/// Privacy accounting attached to a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyStamp {
    pub epsilon: f64,
    pub delta: f64,
    pub accountant: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub columns: Vec<Column>,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub privacy: Option<PrivacyStamp>,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    let mut s = csv_path.as_os_str().to_owned();
    s.push(".schema.json");
    PathBuf::from(s)
}

pub fn write_dataset(
    path: impl AsRef<Path>,
    d: &Dataset,
    seed: Option<u64>,
    privacy: Option<PrivacyStamp>,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(d.schema().columns().iter().map(|c| c.name.as_str()))?;
    for row in d.rows() {
        w.write_record(row.iter().map(|v| format!("{v}")))?;
    }
    w.flush()?;
    let meta = DatasetMeta {
        columns: d.schema().columns().to_vec(),
        provenance: d.provenance().clone(),
        seed,
        privacy,
    };
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<(Dataset, DatasetMeta)> {
    let path = path.as_ref();
    let meta: DatasetMeta = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
    let schema = Schema::new(meta.columns.clone())?;
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let expected: Vec<&str> = schema.columns().iter().map(|c| c.name.as_str()).collect();
    if header != expected {
        return Err(TabularError::SchemaMismatch(format!(
            "csv header {header:?} does not match sidecar columns {expected:?}"
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .zip(&expected)
            .map(|(c, name)| {
                c.parse::<f64>().map_err(|e| TabularError::InvalidCell {
                    row: i,
                    column: name.to_string(),
                    reason: e.to_string(),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let d = Dataset::new(schema, rows, meta.provenance.clone())?;
    Ok((d, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_then_read() {
        let schema = Schema::new(vec![
            Column::numeric("x"),
            Column::categorical("c", vec!["a".into(), "b".into()]),
            Column::label("y"),
        ])
        .unwrap();
        let d = Dataset::new(
            schema,
            vec![vec![0.1 + 0.2, 1.0, 1.0], vec![-3e-12, 0.0, 0.0]],
            Provenance::Synthetic { run_id: "r1".into() },
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let stamp = PrivacyStamp {
            epsilon: 9.5,
            delta: 1e-5,
            accountant: "strict".into(),
        };
        write_dataset(&p, &d, Some(7), Some(stamp.clone())).unwrap();
        let (back, meta) = read_dataset(&p).unwrap();
        assert_eq!(back, d);
        assert_eq!(meta.seed, Some(7));
        assert_eq!(meta.privacy, Some(stamp));
    }
}
