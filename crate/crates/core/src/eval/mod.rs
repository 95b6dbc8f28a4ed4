//! Evaluation: confusion-matrix metrics, ROC-AUC, the Wilcoxon signed-rank
//! test and average ranks across datasets.

mod auc;
mod metrics;
mod rank;
mod wilcoxon;

use thiserror::Error;

pub use auc::roc_auc;
pub use metrics::{classification_metrics, confusion_matrix, ConfusionMatrix, MetricSet};
pub use rank::{average_rank, RankTable};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonMethod, WilcoxonResult, EXACT_MAX_N};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("length mismatch: {0} labels vs {1} predictions")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("ROC-AUC needs both classes among the labels")]
    SingleClass,
    #[error("all paired differences are zero")]
    AllZeroDifferences,
    #[error("score matrix must be non-empty and rectangular")]
    Ragged,
}

pub type Result<T> = std::result::Result<T, EvalError>;
