use serde::{Deserialize, Serialize};

use super::{EvalError, Result};

/// Counts with churn (label 1) as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

pub fn confusion_matrix(labels: &[u8], predictions: &[u8]) -> Result<ConfusionMatrix> {
    if labels.len() != predictions.len() {
        return Err(EvalError::LengthMismatch(labels.len(), predictions.len()));
    }
    if labels.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (&y, &p) in labels.iter().zip(predictions) {
        match (y == 1, p == 1) {
            (true, true) => cm.tp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fp += 1,
            (true, false) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// The six reported metrics. `None` marks a zero denominator, which is not
/// the same thing as a score of zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: Option<f64>,
    pub specificity: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f_measure: Option<f64>,
    pub auc: Option<f64>,
}

impl MetricSet {
    pub const NAMES: [&'static str; 6] = [
        "accuracy",
        "specificity",
        "precision",
        "recall",
        "f_measure",
        "auc",
    ];

    pub fn values(&self) -> [Option<f64>; 6] {
        [
            self.accuracy,
            self.specificity,
            self.precision,
            self.recall,
            self.f_measure,
            self.auc,
        ]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Self::NAMES
            .iter()
            .position(|n| *n == name)
            .and_then(|i| self.values()[i])
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Accuracy, specificity, precision, recall and F-measure; `auc` is left
/// unset.
pub fn classification_metrics(cm: &ConfusionMatrix) -> MetricSet {
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let f_measure = match (precision, recall) {
        // 2PR/(P+R) in counts; P = R = 0 gives 0
        (Some(_), Some(_)) => ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn_),
        _ => None,
    };
    MetricSet {
        accuracy: ratio(cm.tp + cm.tn, cm.total()),
        specificity: ratio(cm.tn, cm.tn + cm.fp),
        precision,
        recall,
        f_measure,
        auc: None,
    }
}
