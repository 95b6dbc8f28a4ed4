use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Column, ColumnKind, Dataset, Provenance, RawTable, Result, Schema, TabularError};

/// Cleaning rules applied before any modelling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    /// Name of the binary churn column.
    pub target: String,
    /// Identifier or free-text columns to discard. Never inferred.
    pub drop_columns: Vec<String>,
    pub missing_numeric_fill: f64,
    pub missing_category_token: String,
    pub yes_tokens: Vec<String>,
    pub no_tokens: Vec<String>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            target: "churn".to_string(),
            drop_columns: Vec::new(),
            missing_numeric_fill: 0.0,
            missing_category_token: "MISSING".to_string(),
            yes_tokens: vec!["yes".to_string(), "true".to_string()],
            no_tokens: vec!["no".to_string(), "false".to_string()],
        }
    }
}

impl PreprocessConfig {
    pub fn new(target: impl Into<String>) -> Self {
        Self {
            target: target.into(),
            ..Self::default()
        }
    }

    pub fn with_drop_columns<I, S>(mut self, cols: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.drop_columns = cols.into_iter().map(Into::into).collect();
        self
    }

    fn is_yes(&self, s: &str) -> bool {
        self.yes_tokens.iter().any(|t| t.eq_ignore_ascii_case(s))
    }

    fn is_no(&self, s: &str) -> bool {
        self.no_tokens.iter().any(|t| t.eq_ignore_ascii_case(s))
    }
}

fn parse_real(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Per-column encoder built while inferring the schema.
enum CellCodec {
    Numeric,
    Categorical {
        codes: HashMap<String, usize>,
        yes_no: bool,
    },
    Label,
}

fn plan_columns(raw: &RawTable, cfg: &PreprocessConfig) -> Result<(Schema, Vec<CellCodec>)> {
    let target = raw
        .column_index(&cfg.target)
        .ok_or_else(|| TabularError::MissingTarget(cfg.target.clone()))?;

    let mut columns = Vec::with_capacity(raw.header.len());
    let mut codecs = Vec::with_capacity(raw.header.len());
    for (j, name) in raw.header.iter().enumerate() {
        let cells = raw.rows.iter().map(|r| r[j].as_deref());
        if j == target {
            for (row, c) in cells.enumerate() {
                label_value(c, cfg).ok_or_else(|| TabularError::NonBinaryLabel {
                    column: name.clone(),
                    value: c.map(str::to_string).unwrap_or_else(|| format!("<missing at row {row}>")),
                })?;
            }
            columns.push(Column::label(name.clone()));
            codecs.push(CellCodec::Label);
            continue;
        }

        let numeric = raw.rows.iter().all(|r| r[j].as_deref().is_none_or(|c| parse_real(c).is_some()));
        if numeric {
            columns.push(Column::numeric(name.clone()));
            codecs.push(CellCodec::Numeric);
            continue;
        }

        let yes_no = raw
            .rows
            .iter()
            .filter_map(|r| r[j].as_deref())
            .any(|c| cfg.is_yes(c) || cfg.is_no(c));
        let mut categories: Vec<String> = Vec::new();
        let mut codes: HashMap<String, usize> = HashMap::new();
        if yes_no {
            let first = |pred: &dyn Fn(&str) -> bool, fallback: &str| {
                raw.rows
                    .iter()
                    .filter_map(|r| r[j].as_deref())
                    .find(|c| pred(c))
                    .unwrap_or(fallback)
                    .to_string()
            };
            let no_default = cfg.no_tokens.first().map(String::as_str).unwrap_or("no");
            let yes_default = cfg.yes_tokens.first().map(String::as_str).unwrap_or("yes");
            categories.push(first(&|c| cfg.is_no(c), no_default));
            categories.push(first(&|c| cfg.is_yes(c), yes_default));
        }
        for r in &raw.rows {
            let key = match r[j].as_deref() {
                Some(c) if yes_no && cfg.is_no(c) => {
                    codes.insert(c.to_string(), 0);
                    continue;
                }
                Some(c) if yes_no && cfg.is_yes(c) => {
                    codes.insert(c.to_string(), 1);
                    continue;
                }
                Some(c) => c,
                None => cfg.missing_category_token.as_str(),
            };
            if !codes.contains_key(key) {
                codes.insert(key.to_string(), categories.len());
                categories.push(key.to_string());
            }
        }
        columns.push(Column::categorical(name.clone(), categories));
        codecs.push(CellCodec::Categorical { codes, yes_no });
    }
    Ok((Schema::new(columns)?, codecs))
}

fn label_value(cell: Option<&str>, cfg: &PreprocessConfig) -> Option<f64> {
    let c = cell?;
    if cfg.is_yes(c) {
        return Some(1.0);
    }
    if cfg.is_no(c) {
        return Some(0.0);
    }
    match parse_real(c) {
        Some(v) if v == 0.0 || v == 1.0 => Some(v),
        _ => None,
    }
}

/// Infers column kinds: a column is numeric iff every non-missing cell
/// parses as a finite real, otherwise categorical. The configured target
/// becomes the binary label.
pub fn infer_schema(raw: &RawTable, cfg: &PreprocessConfig) -> Result<Schema> {
    plan_columns(raw, cfg).map(|(s, _)| s)
}

/// Applies the cleaning rules: explicit column drops, missing-value filling,
/// yes/no to 1/0, first-appearance label encoding, then removal of constant
/// and duplicated feature columns.
pub fn preprocess(raw: &RawTable, cfg: &PreprocessConfig) -> Result<Dataset> {
    for d in &cfg.drop_columns {
        if raw.column_index(d).is_none() {
            return Err(TabularError::SchemaMismatch(format!(
                "drop column {d:?} not present in table"
            )));
        }
        if *d == cfg.target {
            return Err(TabularError::SchemaMismatch(format!(
                "target column {d:?} cannot be dropped"
            )));
        }
    }
    let (schema, codecs) = plan_columns(raw, cfg)?;

    let mut encoded: Vec<Vec<f64>> = Vec::with_capacity(raw.rows.len());
    for r in &raw.rows {
        let mut out = Vec::with_capacity(r.len());
        for (c, codec) in r.iter().zip(&codecs) {
            let c = c.as_deref();
            out.push(match codec {
                CellCodec::Numeric => c.and_then(parse_real).unwrap_or(cfg.missing_numeric_fill),
                CellCodec::Label => label_value(c, cfg).expect("validated during planning"),
                CellCodec::Categorical { codes, yes_no } => {
                    let code = match c {
                        Some(v) if *yes_no && cfg.is_no(v) => 0,
                        Some(v) if *yes_no && cfg.is_yes(v) => 1,
                        Some(v) => codes[v],
                        None => codes[cfg.missing_category_token.as_str()],
                    };
                    code as f64
                }
            });
        }
        encoded.push(out);
    }

    let mut keep: Vec<usize> = Vec::new();
    for (j, col) in schema.columns().iter().enumerate() {
        if col.kind == ColumnKind::BinaryLabel {
            keep.push(j);
            continue;
        }
        if cfg.drop_columns.iter().any(|d| *d == col.name) {
            continue;
        }
        let first = encoded[0][j];
        if encoded.iter().all(|r| r[j] == first) {
            continue;
        }
        let duplicate = keep.iter().any(|&k| {
            schema.columns()[k].kind != ColumnKind::BinaryLabel
                && encoded.iter().all(|r| r[k] == r[j])
        });
        if !duplicate {
            keep.push(j);
        }
    }

    let columns = keep.iter().map(|&j| schema.columns()[j].clone()).collect();
    let rows = encoded
        .into_iter()
        .map(|r| keep.iter().map(|&j| r[j]).collect())
        .collect();
    Dataset::new(Schema::new(columns)?, rows, Provenance::Real)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> PreprocessConfig {
        PreprocessConfig::new("churn")
    }

    fn kinds(raw: &RawTable) -> Vec<ColumnKind> {
        infer_schema(raw, &cfg())
            .unwrap()
            .columns()
            .iter()
            .map(|c| c.kind)
            .collect()
    }

    #[test]
    fn numeric_column_detected() {
        let raw = RawTable::from_grid(&["x", "churn"], &[vec!["12.5", "1"], vec!["3", "0"]]).unwrap();
        assert_eq!(kinds(&raw), vec![ColumnKind::Numeric, ColumnKind::BinaryLabel]);
    }

    #[test]
    fn yes_no_column_is_categorical_with_two_categories() {
        let raw = RawTable::from_grid(
            &["x", "churn"],
            &[vec!["yes", "1"], vec!["no", "0"], vec!["yes", "1"]],
        )
        .unwrap();
        let s = infer_schema(&raw, &cfg()).unwrap();
        assert_eq!(s.columns()[0].kind, ColumnKind::Categorical);
        assert_eq!(s.columns()[0].categories.len(), 2);
    }

    #[test]
    fn mixed_column_is_categorical() {
        let raw = RawTable::from_grid(&["x", "churn"], &[vec!["1", "1"], vec!["a", "0"]]).unwrap();
        assert_eq!(kinds(&raw)[0], ColumnKind::Categorical);
    }

    #[test]
    fn target_errors() {
        let raw = RawTable::from_grid(&["x", "y"], &[vec!["1", "1"]]).unwrap();
        assert!(matches!(infer_schema(&raw, &cfg()), Err(TabularError::MissingTarget(_))));
        let raw = RawTable::from_grid(&["x", "churn"], &[vec!["1", "2"]]).unwrap();
        assert!(matches!(infer_schema(&raw, &cfg()), Err(TabularError::NonBinaryLabel { .. })));
        let raw = RawTable::from_grid(&["x", "churn"], &[vec!["1", ""]]).unwrap();
        assert!(matches!(infer_schema(&raw, &cfg()), Err(TabularError::NonBinaryLabel { .. })));
    }

    #[test]
    fn encoding_rules() {
        let raw = RawTable::from_grid(
            &["id", "amount", "partner", "plan", "churn"],
            &[
                vec!["a1", "10", "yes", "gold", "Yes"],
                vec!["a2", "", "no", "", "No"],
                vec!["a3", "7.5", "Yes", "silver", "No"],
                vec!["a4", "2", "no", "gold", "Yes"],
            ],
        )
        .unwrap();
        let d = preprocess(&raw, &cfg().with_drop_columns(["id"])).unwrap();
        let names: Vec<_> = d.schema().columns().iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, vec!["amount", "partner", "plan", "churn"]);
        // yes -> 1, missing numeric -> 0, missing category -> distinct code
        assert_eq!(d.rows()[0], vec![10.0, 1.0, 0.0, 1.0]);
        assert_eq!(d.rows()[1], vec![0.0, 0.0, 1.0, 0.0]);
        assert_eq!(d.rows()[2], vec![7.5, 1.0, 2.0, 0.0]);
        assert_eq!(d.schema().columns()[2].categories, vec!["gold", "MISSING", "silver"]);
    }

    #[test]
    fn drops_constant_and_duplicate_columns() {
        let raw = RawTable::from_grid(
            &["a", "b", "k", "c", "churn"],
            &[vec!["1", "1", "5", "x", "1"], vec!["2", "2", "5", "y", "0"], vec!["3", "3", "5", "x", "0"]],
        )
        .unwrap();
        let d = preprocess(&raw, &cfg()).unwrap();
        let names: Vec<_> = d.schema().columns().iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, vec!["a", "c", "churn"]);
    }

    #[test]
    fn unknown_drop_column_is_an_error() {
        let raw = RawTable::from_grid(&["a", "churn"], &[vec!["1", "1"]]).unwrap();
        assert!(preprocess(&raw, &cfg().with_drop_columns(["nope"])).is_err());
        assert!(preprocess(&raw, &cfg().with_drop_columns(["churn"])).is_err());
    }
}
