use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PipelineConfig, Result, Variant};
use crate::classifiers::ClassifierKind;
use crate::eval::{average_rank, wilcoxon_signed_rank, MetricSet, RankTable, WilcoxonResult};

/// One evaluated (dataset, variant, classifier, run) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset: String,
    pub variant: Variant,
    pub classifier: ClassifierKind,
    /// Position in the configured classifier list.
    pub classifier_index: usize,
    /// 0 for variants trained on real data, `1..=n` for synthetic runs.
    pub run: usize,
    pub run_id: String,
    pub seed: Option<u64>,
    /// Privacy spent by the run's generator, for synthetic variants.
    pub epsilon: Option<f64>,
    pub metrics: MetricSet,
    /// Set when the cell could not be trained or evaluated.
    pub error: Option<String>,
}

/// Mean of every metric over the runs of one cell. Undefined values are
/// left out of the mean and counted in `undefined`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub dataset: String,
    pub variant: Variant,
    pub classifier: ClassifierKind,
    pub classifier_index: usize,
    pub n_runs: usize,
    pub n_failed: usize,
    pub mean: MetricSet,
    /// Per metric, how many successful runs had it undefined.
    pub undefined: [usize; 6],
    pub mean_epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub variant: Variant,
    pub metric: String,
    pub datasets: Vec<String>,
    pub classifiers: Vec<String>,
    pub table: Option<RankTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonPair {
    pub dataset: String,
    pub classifier: String,
    pub treatment: f64,
    pub baseline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonReport {
    pub metric: String,
    pub treatment: Variant,
    pub baseline: Variant,
    pub alpha: f64,
    pub pairs: Vec<WilcoxonPair>,
    pub result: Option<WilcoxonResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub summary: Vec<SummaryRow>,
    pub ranks: Vec<RankReport>,
    pub wilcoxon: Vec<WilcoxonReport>,
}

fn classifier_label(kind: ClassifierKind, index: usize, cfg_kinds: &[ClassifierKind]) -> String {
    if cfg_kinds.iter().filter(|&&k| k == kind).count() > 1 {
        format!("{kind}-{index}")
    } else {
        kind.to_string()
    }
}

fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(String, Variant, usize)> = Vec::new();
    for r in records {
        let k = (r.dataset.clone(), r.variant, r.classifier_index);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(dataset, variant, ci)| {
            let cell: Vec<&RunRecord> = records
                .iter()
                .filter(|r| r.dataset == dataset && r.variant == variant && r.classifier_index == ci)
                .collect();
            let ok: Vec<&&RunRecord> = cell.iter().filter(|r| r.error.is_none()).collect();
            let mut means = [None; 6];
            let mut undefined = [0usize; 6];
            for m in 0..6 {
                let vals: Vec<f64> = ok.iter().filter_map(|r| r.metrics.values()[m]).collect();
                undefined[m] = ok.len() - vals.len();
                if !vals.is_empty() {
                    means[m] = Some(vals.iter().sum::<f64>() / vals.len() as f64);
                }
            }
            let eps: Vec<f64> = cell.iter().filter_map(|r| r.epsilon).collect();
            SummaryRow {
                classifier: cell[0].classifier,
                dataset,
                variant,
                classifier_index: ci,
                n_runs: cell.len(),
                n_failed: cell.len() - ok.len(),
                mean: MetricSet {
                    accuracy: means[0],
                    specificity: means[1],
                    precision: means[2],
                    recall: means[3],
                    f_measure: means[4],
                    auc: means[5],
                },
                undefined,
                mean_epsilon: (!eps.is_empty()).then(|| eps.iter().sum::<f64>() / eps.len() as f64),
            }
        })
        .collect()
}

fn rank_reports(summary: &[SummaryRow], kinds: &[ClassifierKind]) -> Vec<RankReport> {
    let mut variants: Vec<Variant> = Vec::new();
    let mut datasets: Vec<String> = Vec::new();
    for s in summary {
        if !variants.contains(&s.variant) {
            variants.push(s.variant);
        }
        if !datasets.contains(&s.dataset) {
            datasets.push(s.dataset.clone());
        }
    }
    let mut out = Vec::new();
    for &variant in &variants {
        for (m, metric) in MetricSet::NAMES.iter().enumerate() {
            let classifiers: Vec<String> = (0..kinds.len()).map(|ci| classifier_label(kinds[ci], ci, kinds)).collect();
            let mut matrix = Vec::new();
            let mut missing = None;
            for d in &datasets {
                let row: Vec<Option<f64>> = (0..kinds.len())
                    .map(|ci| {
                        summary
                            .iter()
                            .find(|s| &s.dataset == d && s.variant == variant && s.classifier_index == ci)
                            .and_then(|s| s.mean.values()[m])
                    })
                    .collect();
                if let Some(ci) = row.iter().position(Option::is_none) {
                    missing = Some(format!("{} has no defined mean on {d}", classifiers[ci]));
                }
                matrix.push(row.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect::<Vec<f64>>());
            }
            let table = if missing.is_none() {
                average_rank(&matrix, true).ok()
            } else {
                None
            };
            out.push(RankReport {
                variant,
                metric: metric.to_string(),
                datasets: datasets.clone(),
                classifiers,
                table,
                note: missing,
            });
        }
    }
    out
}

fn wilcoxon_reports(summary: &[SummaryRow], kinds: &[ClassifierKind], alpha: f64) -> Vec<WilcoxonReport> {
    let (treatment, baseline) = (Variant::GansAwoe, Variant::Raw);
    let mut datasets: Vec<&str> = summary.iter().map(|s| s.dataset.as_str()).collect();
    datasets.dedup();
    let has = |v: Variant| summary.iter().any(|s| s.variant == v);
    if datasets.len() < 2 || !has(treatment) || !has(baseline) {
        return Vec::new();
    }
    MetricSet::NAMES
        .iter()
        .enumerate()
        .map(|(m, metric)| {
            let mut pairs = Vec::new();
            for d in &datasets {
                for ci in 0..kinds.len() {
                    let get = |v: Variant| {
                        summary
                            .iter()
                            .find(|s| s.dataset == *d && s.variant == v && s.classifier_index == ci)
                            .and_then(|s| s.mean.values()[m])
                    };
                    if let (Some(t), Some(b)) = (get(treatment), get(baseline)) {
                        pairs.push(WilcoxonPair {
                            dataset: d.to_string(),
                            classifier: classifier_label(kinds[ci], ci, kinds),
                            treatment: t,
                            baseline: b,
                        });
                    }
                }
            }
            let input: Vec<(f64, f64)> = pairs.iter().map(|p| (p.treatment, p.baseline)).collect();
            let (result, note) = match wilcoxon_signed_rank(&input, alpha) {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            };
            WilcoxonReport {
                metric: metric.to_string(),
                treatment,
                baseline,
                alpha,
                pairs,
                result,
                note,
            }
        })
        .collect()
}

/// Averages per cell, rank tables per variant and metric, and the
/// gans-awoe versus raw Wilcoxon test when at least two datasets are
/// present.
pub fn emit_report(records: &[RunRecord], cfg: &PipelineConfig) -> Report {
    let kinds: Vec<ClassifierKind> = cfg.classifiers.iter().map(|c| c.kind()).collect();
    let summary = summarize(records);
    Report {
        ranks: rank_reports(&summary, &kinds),
        wilcoxon: wilcoxon_reports(&summary, &kinds, cfg.alpha),
        summary,
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

pub fn write_report(dir: &Path, records: &[RunRecord], report: &Report) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("runs.csv"))?;
    let mut header = vec!["dataset", "variant", "classifier", "run", "run_id", "seed", "epsilon"];
    header.extend(MetricSet::NAMES);
    header.extend(["undefined", "error"]);
    w.write_record(&header)?;
    for r in records {
        let undefined: Vec<&str> = MetricSet::NAMES
            .iter()
            .zip(r.metrics.values())
            .filter(|(_, v)| v.is_none() && r.error.is_none())
            .map(|(n, _)| *n)
            .collect();
        let mut row = vec![
            r.dataset.clone(),
            r.variant.to_string(),
            r.classifier.to_string(),
            r.run.to_string(),
            r.run_id.clone(),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
            cell(r.epsilon),
        ];
        row.extend(r.metrics.values().into_iter().map(cell));
        row.push(undefined.join(";"));
        row.push(r.error.clone().unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
    let mut header = vec!["dataset", "variant", "classifier", "n_runs", "n_failed", "mean_epsilon"];
    header.extend(MetricSet::NAMES);
    let undefined_names: Vec<String> = MetricSet::NAMES.iter().map(|n| format!("{n}_undefined")).collect();
    header.extend(undefined_names.iter().map(String::as_str));
    w.write_record(&header)?;
    for s in &report.summary {
        let mut row = vec![
            s.dataset.clone(),
            s.variant.to_string(),
            s.classifier.to_string(),
            s.n_runs.to_string(),
            s.n_failed.to_string(),
            cell(s.mean_epsilon),
        ];
        row.extend(s.mean.values().into_iter().map(cell));
        row.extend(s.undefined.iter().map(|u| u.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;

    std::fs::write(dir.join("runs.json"), serde_json::to_string_pretty(records)?)?;
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&report.summary)?)?;
    std::fs::write(dir.join("ranks.json"), serde_json::to_string_pretty(&report.ranks)?)?;
    std::fs::write(dir.join("wilcoxon.json"), serde_json::to_string_pretty(&report.wilcoxon)?)?;
    Ok(())
}
