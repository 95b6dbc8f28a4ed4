//! Classical churn classifiers behind one fit/score interface.
//!
//! Every model produces a churn score in `[0, 1]`; the hard label is
//! `score >= 0.5`.

mod boosting;
mod fnn;
mod forest;
mod knn;
mod logistic;
mod naive_bayes;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tabular::Dataset;

pub use boosting::{GbParams, GradientBoosting};
pub use fnn::{FeedForward, FnnParams};
pub use forest::{RandomForest, RfParams};
pub use knn::{Knn, KnnParams};
pub use logistic::{LogisticRegression, LrParams};
pub use naive_bayes::{gaussian_nb_posterior, GaussianNb, NbParams, VARIANCE_FLOOR};
pub use tree::{gini_impurity, DTreeParams, DecisionTree, Node, Tree};

#[derive(Debug, Error, PartialEq)]
pub enum ClassifierError {
    #[error("training data needs both classes (churn={churn}, non-churn={nonchurn})")]
    SingleClass { churn: usize, nonchurn: usize },
    #[error("feature {column} of row {row} is not a finite number")]
    NonNumeric { row: usize, column: usize },
    #[error("row width {found} does not match the training width {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("feature matrix and label vector disagree in length ({rows} vs {labels})")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("invalid hyperparameters: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, ClassifierError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Nb,
    Lr,
    Knn,
    DTree,
    Rf,
    Gb,
    Fnn,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 7] = [
        ClassifierKind::Nb,
        ClassifierKind::Lr,
        ClassifierKind::Knn,
        ClassifierKind::DTree,
        ClassifierKind::Rf,
        ClassifierKind::Gb,
        ClassifierKind::Fnn,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ClassifierKind::Nb => "nb",
            ClassifierKind::Lr => "lr",
            ClassifierKind::Knn => "knn",
            ClassifierKind::DTree => "dtree",
            ClassifierKind::Rf => "rf",
            ClassifierKind::Gb => "gb",
            ClassifierKind::Fnn => "fnn",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = ClassifierError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| ClassifierError::InvalidConfig(format!("unknown classifier {s:?}")))
    }
}

/// Kind-specific hyperparameters. Serialized with a `kind` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierParams {
    Nb(NbParams),
    Lr(LrParams),
    Knn(KnnParams),
    DTree(DTreeParams),
    Rf(RfParams),
    Gb(GbParams),
    Fnn(FnnParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub params: ClassifierParams,
    #[serde(default)]
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn default_for(kind: ClassifierKind) -> Self {
        let params = match kind {
            ClassifierKind::Nb => ClassifierParams::Nb(NbParams::default()),
            ClassifierKind::Lr => ClassifierParams::Lr(LrParams::default()),
            ClassifierKind::Knn => ClassifierParams::Knn(KnnParams::default()),
            ClassifierKind::DTree => ClassifierParams::DTree(DTreeParams::default()),
            ClassifierKind::Rf => ClassifierParams::Rf(RfParams::default()),
            ClassifierKind::Gb => ClassifierParams::Gb(GbParams::default()),
            ClassifierKind::Fnn => ClassifierParams::Fnn(FnnParams::default()),
        };
        Self { params, seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn kind(&self) -> ClassifierKind {
        match self.params {
            ClassifierParams::Nb(_) => ClassifierKind::Nb,
            ClassifierParams::Lr(_) => ClassifierKind::Lr,
            ClassifierParams::Knn(_) => ClassifierKind::Knn,
            ClassifierParams::DTree(_) => ClassifierKind::DTree,
            ClassifierParams::Rf(_) => ClassifierKind::Rf,
            ClassifierParams::Gb(_) => ClassifierKind::Gb,
            ClassifierParams::Fnn(_) => ClassifierKind::Fnn,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(ClassifierError::InvalidConfig(msg.to_string()));
        match &self.params {
            ClassifierParams::Nb(p) => {
                if !(p.variance_floor > 0.0) {
                    return bad("NB variance floor must be positive");
                }
            }
            ClassifierParams::Lr(p) => {
                if !(p.learning_rate > 0.0) || !(p.l2 >= 0.0) {
                    return bad("LR needs a positive learning rate and non-negative L2");
                }
            }
            ClassifierParams::Knn(p) => {
                if p.k == 0 {
                    return bad("KNN k must be at least 1");
                }
            }
            ClassifierParams::DTree(p) => {
                if p.max_depth == 0 || p.min_leaf == 0 {
                    return bad("tree depth and min_leaf must be at least 1");
                }
            }
            ClassifierParams::Rf(p) => {
                if p.trees == 0 || p.min_leaf == 0 || p.max_features == Some(0) || p.max_depth == Some(0) {
                    return bad("forest trees, min_leaf, max_features and max_depth must be at least 1");
                }
            }
            ClassifierParams::Gb(p) => {
                if p.trees == 0 || p.max_depth == 0 || p.min_leaf == 0 || !(p.learning_rate > 0.0) {
                    return bad("boosting needs positive trees, depth, min_leaf and learning rate");
                }
            }
            ClassifierParams::Fnn(p) => {
                if p.hidden.contains(&0) || p.batch_size == 0 || !(p.learning_rate > 0.0) {
                    return bad("FNN layer widths, batch size and learning rate must be positive");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedClassifier {
    Nb(GaussianNb),
    Lr(LogisticRegression),
    Knn(Knn),
    DTree(DecisionTree),
    Rf(RandomForest),
    Gb(GradientBoosting),
    Fnn(FeedForward),
}

impl TrainedClassifier {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            TrainedClassifier::Nb(_) => ClassifierKind::Nb,
            TrainedClassifier::Lr(_) => ClassifierKind::Lr,
            TrainedClassifier::Knn(_) => ClassifierKind::Knn,
            TrainedClassifier::DTree(_) => ClassifierKind::DTree,
            TrainedClassifier::Rf(_) => ClassifierKind::Rf,
            TrainedClassifier::Gb(_) => ClassifierKind::Gb,
            TrainedClassifier::Fnn(_) => ClassifierKind::Fnn,
        }
    }

    pub fn width(&self) -> usize {
        match self {
            TrainedClassifier::Nb(m) => m.width(),
            TrainedClassifier::Lr(m) => m.width(),
            TrainedClassifier::Knn(m) => m.width(),
            TrainedClassifier::DTree(m) => m.width(),
            TrainedClassifier::Rf(m) => m.width(),
            TrainedClassifier::Gb(m) => m.width(),
            TrainedClassifier::Fnn(m) => m.width(),
        }
    }

    pub fn predict_proba(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.width() {
            return Err(ClassifierError::WidthMismatch {
                expected: self.width(),
                found: row.len(),
            });
        }
        let s = match self {
            TrainedClassifier::Nb(m) => m.score(row),
            TrainedClassifier::Lr(m) => m.score(row),
            TrainedClassifier::Knn(m) => m.score(row),
            TrainedClassifier::DTree(m) => m.score(row),
            TrainedClassifier::Rf(m) => m.score(row),
            TrainedClassifier::Gb(m) => m.score(row),
            TrainedClassifier::Fnn(m) => m.score(row),
        };
        Ok(s.clamp(0.0, 1.0))
    }

    pub fn predict_label(&self, row: &[f64]) -> Result<u8> {
        Ok(u8::from(self.predict_proba(row)? >= 0.5))
    }

    /// Scores for every row, in order.
    pub fn score_all(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter().map(|r| self.predict_proba(r)).collect()
    }
}

pub fn predict_proba(m: &TrainedClassifier, row: &[f64]) -> Result<f64> {
    m.predict_proba(row)
}

/// Trains on the non-label columns of `train`.
pub fn fit_classifier(spec: &ClassifierSpec, train: &Dataset) -> Result<TrainedClassifier> {
    let (x, y) = train.features_and_labels();
    fit_matrix(spec, &x, &y)
}

/// Trains on an explicit feature matrix and 0/1 labels.
pub fn fit_matrix(spec: &ClassifierSpec, x: &[Vec<f64>], y: &[u8]) -> Result<TrainedClassifier> {
    spec.validate()?;
    check_training_data(x, y)?;
    Ok(match &spec.params {
        ClassifierParams::Nb(p) => TrainedClassifier::Nb(GaussianNb::fit(p, x, y)),
        ClassifierParams::Lr(p) => TrainedClassifier::Lr(LogisticRegression::fit(p, x, y)),
        ClassifierParams::Knn(p) => TrainedClassifier::Knn(Knn::fit(p, x, y)),
        ClassifierParams::DTree(p) => TrainedClassifier::DTree(DecisionTree::fit(p, x, y)),
        ClassifierParams::Rf(p) => TrainedClassifier::Rf(RandomForest::fit(p, x, y, spec.seed)),
        ClassifierParams::Gb(p) => TrainedClassifier::Gb(GradientBoosting::fit(p, x, y)),
        ClassifierParams::Fnn(p) => TrainedClassifier::Fnn(FeedForward::fit(p, x, y, spec.seed)),
    })
}

fn check_training_data(x: &[Vec<f64>], y: &[u8]) -> Result<()> {
    if x.len() != y.len() {
        return Err(ClassifierError::LengthMismatch {
            rows: x.len(),
            labels: y.len(),
        });
    }
    let churn = y.iter().filter(|&&v| v == 1).count();
    let nonchurn = y.len() - churn;
    if churn == 0 || nonchurn == 0 {
        return Err(ClassifierError::SingleClass { churn, nonchurn });
    }
    let width = x[0].len();
    for (r, row) in x.iter().enumerate() {
        if row.len() != width {
            return Err(ClassifierError::WidthMismatch {
                expected: width,
                found: row.len(),
            });
        }
        if let Some(c) = row.iter().position(|v| !v.is_finite()) {
            return Err(ClassifierError::NonNumeric { row: r, column: c });
        }
    }
    Ok(())
}

/// Per-feature z-scoring fitted on the training matrix. Constant features
/// keep unit scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let d = x.first().map_or(0, Vec::len);
        let n = x.len() as f64;
        let mut mean = vec![0.0; d];
        for row in x {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in x {
            for j in 0..d {
                var[j] += (row[j] - mean[j]).powi(2);
            }
        }
        let scale = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > 1e-12 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..40 {
            let t = i as f64 / 40.0;
            x.push(vec![t - 1.5, (t * 7.0).sin()]);
            y.push(0);
            x.push(vec![t + 0.5, (t * 5.0).cos()]);
            y.push(1);
        }
        (x, y)
    }

    #[test]
    fn every_kind_fits_and_scores_in_unit_interval() {
        let (x, y) = blobs();
        for kind in ClassifierKind::ALL {
            let m = fit_matrix(&ClassifierSpec::default_for(kind).with_seed(7), &x, &y).unwrap();
            assert_eq!(m.kind(), kind);
            let scores = m.score_all(&x).unwrap();
            assert!(scores.iter().all(|s| (0.0..=1.0).contains(s)), "{kind}");
            let acc = scores
                .iter()
                .zip(&y)
                .filter(|(s, &l)| u8::from(**s >= 0.5) == l)
                .count() as f64
                / y.len() as f64;
            assert!(acc > 0.9, "{kind} training accuracy {acc}");
        }
    }

    #[test]
    fn rejects_single_class_and_non_finite() {
        let spec = ClassifierSpec::default_for(ClassifierKind::Nb);
        let err = fit_matrix(&spec, &[vec![1.0], vec![2.0]], &[1, 1]).unwrap_err();
        assert_eq!(err, ClassifierError::SingleClass { churn: 2, nonchurn: 0 });
        let err = fit_matrix(&spec, &[vec![1.0], vec![f64::NAN]], &[1, 0]).unwrap_err();
        assert_eq!(err, ClassifierError::NonNumeric { row: 1, column: 0 });
    }

    #[test]
    fn width_mismatch_on_predict() {
        let spec = ClassifierSpec::default_for(ClassifierKind::Lr);
        let m = fit_matrix(&spec, &[vec![1.0], vec![2.0]], &[0, 1]).unwrap();
        assert_eq!(
            m.predict_proba(&[1.0, 2.0]),
            Err(ClassifierError::WidthMismatch { expected: 1, found: 2 })
        );
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in ClassifierKind::ALL {
            assert_eq!(kind.as_str().parse::<ClassifierKind>().unwrap(), kind);
            let spec = ClassifierSpec::default_for(kind);
            let json = serde_json::to_string(&spec).unwrap();
            assert_eq!(serde_json::from_str::<ClassifierSpec>(&json).unwrap(), spec);
        }
        assert!("svm".parse::<ClassifierKind>().is_err());
    }

    #[test]
    fn trained_models_serialize() {
        let (x, y) = blobs();
        for kind in ClassifierKind::ALL {
            let m = fit_matrix(&ClassifierSpec::default_for(kind), &x, &y).unwrap();
            let back: TrainedClassifier = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
            assert_eq!(back.score_all(&x).unwrap(), m.score_all(&x).unwrap(), "{kind}");
        }
    }

    #[test]
    fn invalid_hyperparameters() {
        let mut spec = ClassifierSpec::default_for(ClassifierKind::Knn);
        spec.params = ClassifierParams::Knn(KnnParams { k: 0 });
        assert!(spec.validate().is_err());
    }
}
