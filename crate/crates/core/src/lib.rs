//! Privacy-preserving churn prediction toolkit.
//!
//! The crate is organised around the three-phase workflow it implements:
//!
//! * [`tabular`] ingests CSV data, infers a schema, applies the cleaning
//!   rules and produces stratified train/test partitions.
//! * [`dpwgan`] trains a differentially-private Wasserstein GAN on the
//!   training partition and samples synthetic tables from it, tracking the
//!   privacy spend in a zCDP ledger.
//! * [`awoe`] fits adaptive weight-of-evidence encoders (and the classic
//!   per-value baseline) and transforms tables into log-odds features.
//! * [`classifiers`] trains the seven baseline classifiers behind one
//!   scoring interface.
//! * [`eval`] computes confusion-matrix metrics, ROC-AUC, the Wilcoxon
//!   signed-rank test and average ranks.
//! * [`pipeline`] wires everything together, derives seeds, writes
//!   manifests and reports.

pub mod awoe;
pub mod classifiers;
pub mod dpwgan;
pub mod eval;
pub mod nn;
pub mod pipeline;
pub mod tabular;

pub use awoe::{AwoeConfig, AwoeEncoder};
pub use classifiers::{ClassifierSpec, TrainedClassifier};
pub use dpwgan::{GanConfig, GanModel, PrivacyLedger};
pub use eval::{ConfusionMatrix, MetricSet};
pub use tabular::{Dataset, Schema};
