//! Adaptive weight-of-evidence encoding.
//!
//! Every non-label feature is cut into bins and each value is replaced by
//! the log-ratio of the bin's share of all churners to its share of all
//! non-churners, with a small additive adjustment so empty sides stay
//! finite:
//!
//! ```text
//! woe = ln((churn_in_bin / churn_total + a) / (nonchurn_in_bin / nonchurn_total + a))
//! ```
//!
//! Low-cardinality features (at most `unique_threshold` distinct values) get
//! one bin per value, exactly like the classic encoder. High-cardinality
//! features get `floor(n / q)` equal-frequency bins, so each bin generalises
//! roughly `q` training rows to a single value.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tabular::{Column, ColumnKind, Dataset, Provenance, Schema, TabularError};

#[derive(Debug, Error)]
pub enum AwoeError {
    #[error("training data must contain both churners and non-churners (churn={churn}, non-churn={nonchurn})")]
    SingleClass { churn: usize, nonchurn: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error(transparent)]
    Tabular(#[from] TabularError),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, AwoeError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AwoeConfig {
    /// Divisor turning the sample count into a bin count for high-cardinality features.
    pub q: usize,
    pub unique_threshold: usize,
    pub adjustment: f64,
}

impl Default for AwoeConfig {
    fn default() -> Self {
        Self {
            q: 10,
            unique_threshold: 100,
            adjustment: 1e-4,
        }
    }
}

impl AwoeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(AwoeError::InvalidConfig("q must be at least 1".into()));
        }
        if self.unique_threshold == 0 {
            return Err(AwoeError::InvalidConfig("unique_threshold must be positive".into()));
        }
        if !(self.adjustment > 0.0 && self.adjustment.is_finite()) {
            return Err(AwoeError::InvalidConfig("adjustment must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinMode {
    PerCategory,
    Quantile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WoeMethod {
    Adaptive,
    Vanilla,
}

/// One bin. In per-category mode `lower == upper` is the value itself. In
/// quantile mode `lower`/`upper` are the smallest and largest training
/// values in the bin; at transform time the bin owns the half-open interval
/// `(previous upper, upper]`, with the outermost bins extended to infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lower: f64,
    pub upper: f64,
    pub woe: f64,
    pub churn_count: usize,
    pub nonchurn_count: usize,
}

impl Bin {
    pub fn occupancy(&self) -> usize {
        self.churn_count + self.nonchurn_count
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinTable {
    pub feature: String,
    pub kind: ColumnKind,
    pub mode: BinMode,
    pub bins: Vec<Bin>,
    pub fallback_woe: f64,
}

impl BinTable {
    /// Index of the bin a value falls in, `None` for an unseen category.
    pub fn bin_index(&self, v: f64) -> Option<usize> {
        let last = self.bins.len() - 1;
        match (self.mode, self.kind) {
            (BinMode::PerCategory, ColumnKind::Categorical) => {
                self.bins.binary_search_by(|b| b.lower.total_cmp(&v)).ok()
            }
            (BinMode::PerCategory, _) => {
                let i = self.bins.partition_point(|b| b.lower < v);
                if i == 0 {
                    Some(0)
                } else if i > last {
                    Some(last)
                } else if self.bins[i].lower - v < v - self.bins[i - 1].lower {
                    Some(i)
                } else {
                    Some(i - 1)
                }
            }
            (BinMode::Quantile, _) => Some(self.bins.partition_point(|b| b.upper < v).min(last)),
        }
    }

    pub fn woe_for(&self, v: f64) -> f64 {
        self.bin_index(v)
            .map(|i| self.bins[i].woe)
            .unwrap_or(self.fallback_woe)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AwoeEncoder {
    pub tables: Vec<BinTable>,
    pub fitted_on: Provenance,
    pub config: AwoeConfig,
    pub method: WoeMethod,
    pub schema: Schema,
}

/// Bin count and mode for a feature with `n_unique` distinct values among
/// `n_samples` rows.
pub fn plan_bins(n_samples: usize, n_unique: usize, cfg: &AwoeConfig) -> (usize, BinMode) {
    if n_unique <= cfg.unique_threshold {
        (n_unique, BinMode::PerCategory)
    } else {
        ((n_samples / cfg.q.max(1)).max(2), BinMode::Quantile)
    }
}

pub fn woe_of_bin(churn_frac: f64, nonchurn_frac: f64, adjustment: f64) -> f64 {
    ((churn_frac + adjustment) / (nonchurn_frac + adjustment)).ln()
}

/// Runs of equal values in sorted order: (value, churners, non-churners).
fn value_groups(values: &[f64], labels: &[u8]) -> Vec<(f64, usize, usize)> {
    let mut pairs: Vec<(f64, u8)> = values.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut groups: Vec<(f64, usize, usize)> = Vec::new();
    for (v, y) in pairs {
        match groups.last_mut() {
            Some(g) if g.0 == v => {
                if y == 1 {
                    g.1 += 1
                } else {
                    g.2 += 1
                }
            }
            _ => groups.push((v, (y == 1) as usize, (y != 1) as usize)),
        }
    }
    groups
}

/// Equal-frequency grouping of sorted value runs into at most `b` bins.
/// Bin `i` closes once the cumulative count reaches `round(i * n / b)`;
/// targets already passed because of ties are skipped, so tied values never
/// straddle bins and no bin is empty.
fn quantile_bins(groups: &[(f64, usize, usize)], b: usize) -> Vec<(f64, f64, usize, usize)> {
    let n: usize = groups.iter().map(|g| g.1 + g.2).sum();
    let target = |i: usize| ((i as f64) * n as f64 / b as f64).round() as usize;
    let mut bins = Vec::new();
    let mut next = 1;
    let mut cum = 0;
    let mut open: Option<(f64, f64, usize, usize)> = None;
    for &(v, pos, neg) in groups {
        cum += pos + neg;
        let cur = open.get_or_insert((v, v, 0, 0));
        cur.1 = v;
        cur.2 += pos;
        cur.3 += neg;
        if cum >= target(next) {
            bins.push(open.take().unwrap());
            while next <= b && target(next) <= cum {
                next += 1;
            }
        }
    }
    if let Some(rest) = open {
        bins.push(rest);
    }
    bins
}

fn fit_table(
    column: &Column,
    values: &[f64],
    labels: &[u8],
    totals: (usize, usize),
    cfg: &AwoeConfig,
    method: WoeMethod,
) -> BinTable {
    let groups = value_groups(values, labels);
    let (b, mode) = match method {
        WoeMethod::Adaptive => plan_bins(values.len(), groups.len(), cfg),
        WoeMethod::Vanilla => (groups.len(), BinMode::PerCategory),
    };
    let raw: Vec<(f64, f64, usize, usize)> = match mode {
        BinMode::PerCategory => groups.iter().map(|&(v, p, n)| (v, v, p, n)).collect(),
        BinMode::Quantile => quantile_bins(&groups, b),
    };
    let (churn_total, nonchurn_total) = (totals.0 as f64, totals.1 as f64);
    let bins = raw
        .into_iter()
        .map(|(lower, upper, churn_count, nonchurn_count)| Bin {
            lower,
            upper,
            woe: woe_of_bin(
                churn_count as f64 / churn_total,
                nonchurn_count as f64 / nonchurn_total,
                cfg.adjustment,
            ),
            churn_count,
            nonchurn_count,
        })
        .collect();
    BinTable {
        feature: column.name.clone(),
        kind: column.kind,
        mode,
        bins,
        fallback_woe: 0.0,
    }
}

impl AwoeEncoder {
    pub fn fit(train: &Dataset, cfg: &AwoeConfig, method: WoeMethod) -> Result<Self> {
        cfg.validate()?;
        let (churn, nonchurn) = train.class_counts();
        if churn == 0 || nonchurn == 0 {
            return Err(AwoeError::SingleClass { churn, nonchurn });
        }
        let labels = train.labels();
        let schema = train.schema();
        let tables = schema
            .feature_indices()
            .into_iter()
            .map(|j| {
                fit_table(
                    &schema.columns()[j],
                    &train.column(j),
                    &labels,
                    (churn, nonchurn),
                    cfg,
                    method,
                )
            })
            .collect();
        Ok(Self {
            tables,
            fitted_on: train.provenance().clone(),
            config: *cfg,
            method,
            schema: schema.clone(),
        })
    }

    /// Replaces every feature cell by its bin's woe. The label passes
    /// through and every feature column becomes numeric.
    pub fn transform(&self, d: &Dataset) -> Result<Dataset> {
        if !self.schema.is_compatible(d.schema()) {
            return Err(AwoeError::SchemaMismatch(
                "dataset columns differ from the fitted schema".into(),
            ));
        }
        let label = d.schema().label_index();
        let mut tables = self.tables.iter();
        let lookup: Vec<Option<&BinTable>> = (0..d.schema().len())
            .map(|j| if j == label { None } else { tables.next() })
            .collect();
        let rows = d
            .rows()
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&lookup)
                    .map(|(&v, t)| t.map_or(v, |t| t.woe_for(v)))
                    .collect()
            })
            .collect();
        let columns = d
            .schema()
            .columns()
            .iter()
            .map(|c| match c.kind {
                ColumnKind::BinaryLabel => c.clone(),
                _ => Column::numeric(c.name.clone()),
            })
            .collect();
        Ok(Dataset::new(Schema::new(columns)?, rows, d.provenance().clone())?)
    }

    pub fn table(&self, feature: &str) -> Option<&BinTable> {
        self.tables.iter().find(|t| t.feature == feature)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

pub fn fit_awoe(train: &Dataset, cfg: &AwoeConfig) -> Result<AwoeEncoder> {
    AwoeEncoder::fit(train, cfg, WoeMethod::Adaptive)
}

/// Classic encoder: one bin per distinct value, same adjustment constant.
pub fn fit_vanilla_woe(train: &Dataset) -> Result<AwoeEncoder> {
    AwoeEncoder::fit(train, &AwoeConfig::default(), WoeMethod::Vanilla)
}

pub fn transform(enc: &AwoeEncoder, d: &Dataset) -> Result<Dataset> {
    enc.transform(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(values: &[f64], labels: &[u8]) -> Dataset {
        let schema = Schema::new(vec![Column::numeric("x"), Column::label("y")]).unwrap();
        let rows = values
            .iter()
            .zip(labels)
            .map(|(&v, &y)| vec![v, y as f64])
            .collect();
        Dataset::new(schema, rows, Provenance::Real).unwrap()
    }

    #[test]
    fn plan_examples() {
        let cfg = AwoeConfig::default();
        assert_eq!(plan_bins(100_000, 5_000, &cfg), (10_000, BinMode::Quantile));
        assert_eq!(plan_bins(7_043, 50, &cfg), (50, BinMode::PerCategory));
        assert_eq!(plan_bins(500, 200, &cfg), (50, BinMode::Quantile));
        assert_eq!(plan_bins(101, 101, &cfg), (10, BinMode::Quantile));
        let coarse = AwoeConfig { q: 100, ..cfg };
        assert_eq!(plan_bins(150, 150, &coarse), (2, BinMode::Quantile));
    }

    #[test]
    fn woe_examples() {
        assert_eq!(woe_of_bin(0.25, 0.25, 1e-4), 0.0);
        assert!((woe_of_bin(0.5, 0.25, 1e-4) - (0.5001f64 / 0.2501).ln()).abs() < 1e-15);
        assert!((woe_of_bin(0.5, 0.25, 1e-4) - 0.69295).abs() < 1e-5);
        assert!((woe_of_bin(0.0, 0.4, 1e-4) + 8.2943).abs() < 1e-4);
    }

    #[test]
    fn single_value_feature_has_zero_woe() {
        let enc = fit_awoe(&dataset(&[3.0; 4], &[1, 0, 1, 0]), &AwoeConfig::default()).unwrap();
        assert_eq!(enc.tables[0].bins.len(), 1);
        assert_eq!(enc.tables[0].bins[0].woe, 0.0);
    }

    #[test]
    fn balanced_bins_are_neutral() {
        let enc = fit_awoe(&dataset(&[1.0, 1.0, 2.0, 2.0], &[1, 0, 1, 0]), &AwoeConfig::default())
            .unwrap();
        assert!(enc.tables[0].bins.iter().all(|b| b.woe == 0.0));
    }

    #[test]
    fn separated_bins() {
        let enc = fit_awoe(&dataset(&[1.0, 1.0, 2.0, 2.0], &[1, 1, 0, 0]), &AwoeConfig::default())
            .unwrap();
        let w: Vec<f64> = enc.tables[0].bins.iter().map(|b| b.woe).collect();
        assert!((w[0] - (1.0001f64 / 0.0001).ln()).abs() < 1e-12);
        assert!((w[0] - 9.21).abs() < 1e-2);
        assert!((w[1] + w[0]).abs() < 1e-12);
    }

    #[test]
    fn single_class_rejected() {
        let err = fit_awoe(&dataset(&[1.0, 2.0], &[1, 1]), &AwoeConfig::default()).unwrap_err();
        assert!(matches!(err, AwoeError::SingleClass { .. }));
    }

    #[test]
    fn vanilla_keeps_every_value() {
        let values: Vec<f64> = (0..150).map(f64::from).collect();
        let labels: Vec<u8> = (0..150).map(|i| (i % 3 == 0) as u8).collect();
        let d = dataset(&values, &labels);
        let vanilla = fit_vanilla_woe(&d).unwrap();
        assert_eq!(vanilla.tables[0].bins.len(), 150);
        assert_eq!(vanilla.tables[0].mode, BinMode::PerCategory);
        let adaptive = fit_awoe(&d, &AwoeConfig::default()).unwrap();
        assert_eq!(adaptive.tables[0].mode, BinMode::Quantile);
        assert_eq!(adaptive.tables[0].bins.len(), 15);
        assert!(vanilla.tables[0].bins.iter().all(|b| b.woe.is_finite()));
    }

    #[test]
    fn transform_clamps_and_falls_back() {
        let schema = Schema::new(vec![
            Column::numeric("x"),
            Column::categorical("c", vec!["a".into(), "b".into(), "z".into()]),
            Column::label("y"),
        ])
        .unwrap();
        let values: Vec<f64> = (0..200).map(f64::from).collect();
        let rows: Vec<Vec<f64>> = values
            .iter()
            .map(|&v| vec![v, (v as usize % 2) as f64, (v >= 100.0) as u8 as f64])
            .collect();
        let train = Dataset::new(schema.clone(), rows, Provenance::Real).unwrap();
        let enc = fit_awoe(&train, &AwoeConfig::default()).unwrap();
        let probe = Dataset::new(
            schema,
            vec![vec![1e9, 2.0, 1.0], vec![-1e9, 0.0, 0.0]],
            Provenance::Real,
        )
        .unwrap();
        let out = enc.transform(&probe).unwrap();
        let x = &enc.tables[0];
        assert_eq!(out.rows()[0][0], x.bins.last().unwrap().woe);
        assert_eq!(out.rows()[1][0], x.bins[0].woe);
        // category "z" (code 2) never appeared in training
        assert_eq!(out.rows()[0][1], 0.0);
        assert_eq!(out.rows()[0][2], 1.0);
        assert!(out.schema().columns().iter().all(|c| c.kind != ColumnKind::Categorical));
    }

    #[test]
    fn transform_training_rows_hit_their_bins() {
        let values: Vec<f64> = (0..300).map(|i| ((i * 37) % 211) as f64 * 0.5).collect();
        let labels: Vec<u8> = (0..300).map(|i| (i % 7 < 3) as u8).collect();
        let d = dataset(&values, &labels);
        let enc = fit_awoe(&d, &AwoeConfig::default()).unwrap();
        let t = &enc.tables[0];
        let out = enc.transform(&d).unwrap();
        for (row, &v) in out.rows().iter().zip(&values) {
            let bin = t.bins.iter().find(|b| b.lower <= v && v <= b.upper).unwrap();
            assert_eq!(row[0], bin.woe);
        }
    }

    #[test]
    fn schema_mismatch_rejected() {
        let d = dataset(&[1.0, 2.0], &[1, 0]);
        let enc = fit_awoe(&d, &AwoeConfig::default()).unwrap();
        let other = Dataset::new(
            Schema::new(vec![Column::numeric("other"), Column::label("y")]).unwrap(),
            vec![vec![1.0, 1.0]],
            Provenance::Real,
        )
        .unwrap();
        assert!(matches!(enc.transform(&other), Err(AwoeError::SchemaMismatch(_))));
    }

    #[test]
    fn json_layout_round_trips() {
        let d = dataset(&[1.0, 2.0, 3.0, 4.0], &[1, 0, 0, 1]);
        let enc = fit_awoe(&d, &AwoeConfig::default()).unwrap();
        let json = serde_json::to_string(&enc).unwrap();
        assert!(json.contains("\"mode\":\"per-category\""));
        let back: AwoeEncoder = serde_json::from_str(&json).unwrap();
        assert_eq!(back, enc);
    }
}
