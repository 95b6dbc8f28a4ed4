//! End-to-end experiment driver.
//!
//! A run has three phases with a directory-level trust boundary:
//!
//! 1. **client**: read and clean the dataset, split it into train/test and
//!    write both under `<out>/<dataset>/client/`.
//! 2. **cloud**: see only the training partition. Train one DP-WGAN per
//!    synthetic run, sample synthetic rows, fit the encoders and train every
//!    classifier. Artifacts go to `<out>/<dataset>/cloud/`.
//! 3. **client**: encode the held-out test rows with the fitted encoders,
//!    score them and compute metrics.
//!
//! Reports land in `<out>/reports/` and the manifest in
//! `<out>/manifest.json`. Seeds come from [`derive_seed`], so a manifest is
//! enough to regenerate every report byte for byte.

mod report;
mod sweep;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::awoe::{AwoeConfig, AwoeEncoder, AwoeError, WoeMethod};
use crate::classifiers::{fit_classifier, ClassifierError, ClassifierKind, ClassifierSpec, TrainedClassifier};
use crate::dpwgan::{train_dpwgan, GanConfig, GanError, PrivacyLedger};
use crate::eval::{classification_metrics, confusion_matrix, roc_auc, EvalError, MetricSet};
use crate::tabular::{
    preprocess, split_indices, write_dataset, Dataset, PreprocessConfig, PrivacyStamp, RawTable, TabularError,
};

pub use report::{emit_report, write_report, RankReport, Report, RunRecord, SummaryRow, WilcoxonReport};
pub use sweep::{epsilon_sweep, q_sweep, SweepPoint, DEFAULT_EPSILONS, DEFAULT_QS};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Tabular(#[from] TabularError),
    #[error(transparent)]
    Awoe(#[from] AwoeError),
    #[error(transparent)]
    Gan(#[from] GanError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl PipelineError {
    /// 2 for configuration errors, 4 when the privacy budget cannot afford a
    /// single critic step, 3 for everything else (data and I/O).
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_)
            | PipelineError::Gan(GanError::InvalidConfig(_))
            | PipelineError::Awoe(AwoeError::InvalidConfig(_))
            | PipelineError::Classifier(ClassifierError::InvalidConfig(_)) => 2,
            PipelineError::Gan(GanError::BudgetTooSmall { .. }) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Real training data, raw encoded features.
    Raw,
    /// Synthetic training data, raw encoded features.
    Gans,
    /// Real training data through the adaptive encoder.
    Awoe,
    /// Synthetic training data through the adaptive encoder.
    GansAwoe,
    /// Real training data through the per-value encoder.
    WoeVanilla,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Raw,
        Variant::Gans,
        Variant::Awoe,
        Variant::GansAwoe,
        Variant::WoeVanilla,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Raw => "raw",
            Variant::Gans => "gans",
            Variant::Awoe => "awoe",
            Variant::GansAwoe => "gans-awoe",
            Variant::WoeVanilla => "woe-vanilla",
        }
    }

    pub fn uses_synthetic(&self) -> bool {
        matches!(self, Variant::Gans | Variant::GansAwoe)
    }

    pub fn encoder(&self) -> Option<WoeMethod> {
        match self {
            Variant::Awoe | Variant::GansAwoe => Some(WoeMethod::Adaptive),
            Variant::WoeVanilla => Some(WoeMethod::Vanilla),
            Variant::Raw | Variant::Gans => None,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| PipelineError::Config(format!("unknown variant {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    /// Report name; defaults to the file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub path: PathBuf,
    #[serde(default = "default_target")]
    pub target: String,
    #[serde(default)]
    pub drop_columns: Vec<String>,
    /// Stratified row subsample taken before the split.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample: Option<usize>,
}

fn default_target() -> String {
    "churn".into()
}

impl DatasetSpec {
    pub fn new(path: impl Into<PathBuf>, target: impl Into<String>) -> Self {
        Self {
            name: None,
            path: path.into(),
            target: target.into(),
            drop_columns: Vec::new(),
            subsample: None,
        }
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.path
                .file_stem()
                .map_or_else(|| "dataset".to_string(), |s| s.to_string_lossy().into_owned())
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub datasets: Vec<DatasetSpec>,
    pub variants: Vec<Variant>,
    pub awoe: AwoeConfig,
    pub gan: GanConfig,
    pub classifiers: Vec<ClassifierSpec>,
    pub n_synthetic_runs: usize,
    pub train_fraction: f64,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    /// Synthetic rows per run; `None` samples as many rows as the training
    /// partition has.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic_rows: Option<usize>,
    pub alpha: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            datasets: Vec::new(),
            variants: vec![Variant::Raw, Variant::Gans, Variant::Awoe, Variant::GansAwoe],
            awoe: AwoeConfig::default(),
            gan: GanConfig::default(),
            classifiers: ClassifierKind::ALL.into_iter().map(ClassifierSpec::default_for).collect(),
            n_synthetic_runs: 10,
            train_fraction: 0.7,
            master_seed: 0,
            output_dir: PathBuf::from("churnkit-out"),
            synthetic_rows: None,
            alpha: 0.05,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.as_ref().display())))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("invalid config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_string()));
        if self.datasets.is_empty() {
            return bad("at least one dataset is required");
        }
        if self.variants.is_empty() {
            return bad("the variant set must not be empty");
        }
        if self.classifiers.is_empty() {
            return bad("at least one classifier is required");
        }
        if self.n_synthetic_runs == 0 {
            return bad("n_synthetic_runs must be at least 1");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad("train_fraction must lie strictly between 0 and 1");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie strictly between 0 and 1");
        }
        if self.synthetic_rows == Some(0) {
            return bad("synthetic_rows must be positive");
        }
        let mut names: Vec<String> = self.datasets.iter().map(DatasetSpec::display_name).collect();
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return bad("dataset names must be unique");
        }
        self.awoe.validate()?;
        if self.variants.iter().any(Variant::uses_synthetic) {
            self.gan.validate()?;
        }
        for c in &self.classifiers {
            c.validate()?;
        }
        Ok(())
    }
}

/// Stream tags for [`run_seed`].
pub const STREAM_SPLIT: u64 = 1;
pub const STREAM_GAN: u64 = 2;
pub const STREAM_SAMPLE: u64 = 3;
pub const STREAM_CLASSIFIER: u64 = 4;
pub const STREAM_SUBSAMPLE: u64 = 5;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based child seed: `splitmix64(master ^ splitmix64(counter))`.
pub fn derive_seed(master: u64, counter: u64) -> u64 {
    splitmix64(master ^ splitmix64(counter))
}

/// Seed for `(stream, dataset, run)` under `master`.
pub fn run_seed(master: u64, stream: u64, dataset: usize, run: usize) -> u64 {
    derive_seed(derive_seed(derive_seed(master, stream), dataset as u64), run as u64)
}

/// Phase-1 output for one dataset.
#[derive(Debug, Clone)]
pub struct ClientData {
    pub name: String,
    pub train: Dataset,
    pub test: Dataset,
    pub split_seed: u64,
}

/// Reads, cleans, subsamples and splits one dataset.
pub fn client_prepare(spec: &DatasetSpec, index: usize, cfg: &PipelineConfig) -> Result<ClientData> {
    let raw = RawTable::from_path(&spec.path)?;
    let pre = PreprocessConfig::new(spec.target.clone()).with_drop_columns(spec.drop_columns.iter().cloned());
    let full = preprocess(&raw, &pre)?;
    let data = prepare_dataset(full, spec.subsample, index, cfg)?;
    let split_seed = run_seed(cfg.master_seed, STREAM_SPLIT, index, 0);
    let (train_idx, test_idx) = split_indices(&data, cfg.train_fraction, split_seed)?;
    Ok(ClientData {
        name: spec.display_name(),
        train: data.subset(&train_idx),
        test: data.subset(&test_idx),
        split_seed,
    })
}

fn prepare_dataset(full: Dataset, subsample: Option<usize>, index: usize, cfg: &PipelineConfig) -> Result<Dataset> {
    match subsample {
        Some(k) if k < full.n_rows() => {
            let seed = run_seed(cfg.master_seed, STREAM_SUBSAMPLE, index, 0);
            let (keep, _) = split_indices(&full, k as f64 / full.n_rows() as f64, seed)?;
            Ok(full.subset(&keep))
        }
        _ => Ok(full),
    }
}

/// What the cloud phase hands back for one variant.
#[derive(Debug, Clone)]
pub struct TrainedVariant {
    pub variant: Variant,
    pub encoder: Option<AwoeEncoder>,
    /// One entry per configured classifier; `Err` keeps the failure text.
    pub models: Vec<std::result::Result<(TrainedClassifier, u64), String>>,
}

/// Phase-2 output for one run.
#[derive(Debug, Clone)]
pub struct CloudRun {
    pub run: usize,
    pub synthetic: Option<Dataset>,
    pub ledger: Option<PrivacyLedger>,
    pub gan_seed: Option<u64>,
    pub sample_seed: Option<u64>,
    pub variants: Vec<TrainedVariant>,
}

fn classifier_seed(cfg: &PipelineConfig, dataset: usize, run: usize, spec: &ClassifierSpec, ci: usize) -> u64 {
    derive_seed(run_seed(cfg.master_seed, STREAM_CLASSIFIER, dataset, run) ^ spec.seed, ci as u64)
}

fn train_variant(
    variant: Variant,
    data: std::result::Result<&Dataset, String>,
    cfg: &PipelineConfig,
    dataset: usize,
    run: usize,
) -> TrainedVariant {
    let fitted = data.and_then(|d| match variant.encoder() {
        Some(method) => {
            let enc = AwoeEncoder::fit(d, &cfg.awoe, method).map_err(|e| e.to_string())?;
            let encoded = enc.transform(d).map_err(|e| e.to_string())?;
            Ok((Some(enc), encoded))
        }
        None => Ok((None, d.clone())),
    });
    match fitted {
        Ok((encoder, train)) => {
            let models = cfg
                .classifiers
                .par_iter()
                .enumerate()
                .map(|(ci, spec)| {
                    let seed = classifier_seed(cfg, dataset, run, spec, ci);
                    fit_classifier(&spec.clone().with_seed(seed), &train)
                        .map(|m| (m, seed))
                        .map_err(|e| e.to_string())
                })
                .collect();
            TrainedVariant {
                variant,
                encoder,
                models,
            }
        }
        Err(e) => TrainedVariant {
            variant,
            encoder: None,
            models: cfg.classifiers.iter().map(|_| Err(e.clone())).collect(),
        },
    }
}

/// Phase 2 for one synthetic run. Only the training partition is visible.
/// A budget too small for one critic step is an error; anything else that
/// goes wrong inside a variant is recorded on its cells.
pub fn cloud_run(train: &Dataset, cfg: &PipelineConfig, dataset: usize, run: usize) -> Result<CloudRun> {
    let synthetic_variants: Vec<Variant> = cfg.variants.iter().copied().filter(Variant::uses_synthetic).collect();
    let (synthetic, ledger, gan_seed, sample_seed) = if synthetic_variants.is_empty() {
        (None, None, None, None)
    } else {
        let gan_seed = run_seed(cfg.master_seed, STREAM_GAN, dataset, run);
        let sample_seed = run_seed(cfg.master_seed, STREAM_SAMPLE, dataset, run);
        let (model, ledger) = train_dpwgan(train, &cfg.gan, gan_seed)?;
        let n = cfg.synthetic_rows.unwrap_or(train.n_rows());
        let synthetic = model.sample_synthetic_as(n, sample_seed, format!("run-{run:02}"))?;
        (Some(synthetic), Some(ledger), Some(gan_seed), Some(sample_seed))
    };
    let variants = synthetic_variants
        .iter()
        .map(|&v| train_variant(v, Ok(synthetic.as_ref().expect("synthetic data")), cfg, dataset, run))
        .collect();
    Ok(CloudRun {
        run,
        synthetic,
        ledger,
        gan_seed,
        sample_seed,
        variants,
    })
}

/// Phase 2 for the variants trained on real data. They are fitted once.
pub fn cloud_real(train: &Dataset, cfg: &PipelineConfig, dataset: usize) -> CloudRun {
    let variants = cfg
        .variants
        .iter()
        .filter(|v| !v.uses_synthetic())
        .map(|&v| train_variant(v, Ok(train), cfg, dataset, 0))
        .collect();
    CloudRun {
        run: 0,
        synthetic: None,
        ledger: None,
        gan_seed: None,
        sample_seed: None,
        variants,
    }
}

/// Metrics of one model on already-encoded test rows.
pub fn evaluate_model(model: &TrainedClassifier, test: &Dataset) -> Result<MetricSet> {
    let (x, y) = test.features_and_labels();
    let scores = model.score_all(&x)?;
    let preds: Vec<u8> = scores.iter().map(|&s| u8::from(s >= 0.5)).collect();
    let cm = confusion_matrix(&y, &preds)?;
    let mut m = classification_metrics(&cm);
    m.auc = roc_auc(&y, &scores).ok();
    Ok(m)
}

/// Phase 3: encode the held-out rows with each variant's encoder and score
/// every model.
pub fn client_evaluate(dataset: &str, test: &Dataset, cloud: &CloudRun, cfg: &PipelineConfig) -> Vec<RunRecord> {
    let mut out = Vec::new();
    for tv in &cloud.variants {
        let encoded = match &tv.encoder {
            Some(enc) => enc.transform(test).map_err(|e| e.to_string()),
            None => Ok(test.clone()),
        };
        for (ci, model) in tv.models.iter().enumerate() {
            let kind = cfg.classifiers[ci].kind();
            let seed = model.as_ref().ok().map(|p| p.1);
            let result = encoded.as_ref().map_err(Clone::clone).and_then(|t| match model {
                Ok((m, _)) => evaluate_model(m, t).map_err(|e| e.to_string()),
                Err(e) => Err(e.clone()),
            });
            let (metrics, error) = match result {
                Ok(m) => (m, None),
                Err(e) => (MetricSet::default(), Some(e)),
            };
            out.push(RunRecord {
                dataset: dataset.to_string(),
                variant: tv.variant,
                classifier: kind,
                classifier_index: ci,
                run: cloud.run,
                run_id: if tv.variant.uses_synthetic() {
                    format!("run-{:02}", cloud.run)
                } else {
                    "real".to_string()
                },
                seed,
                epsilon: if tv.variant.uses_synthetic() {
                    cloud.ledger.as_ref().map(PrivacyLedger::epsilon)
                } else {
                    None
                },
                metrics,
                error,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub rows: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub split_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub dataset: String,
    pub run: usize,
    pub gan_seed: u64,
    pub sample_seed: u64,
    pub critic_steps: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub accountant: String,
}

/// Everything needed to regenerate a pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config: PipelineConfig,
    pub datasets: Vec<DatasetManifest>,
    pub runs: Vec<RunManifest>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub records: Vec<RunRecord>,
    pub report: Report,
    pub manifest: Manifest,
}

fn stamp(ledger: &PrivacyLedger) -> PrivacyStamp {
    PrivacyStamp {
        epsilon: ledger.epsilon(),
        delta: ledger.delta,
        accountant: ledger.mode.as_str().to_string(),
    }
}

fn write_cloud_run(dir: &Path, cloud: &CloudRun) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    if let (Some(syn), Some(ledger)) = (&cloud.synthetic, &cloud.ledger) {
        write_dataset(dir.join("synthetic.csv"), syn, cloud.sample_seed, Some(stamp(ledger)))?;
        std::fs::write(dir.join("ledger.json"), serde_json::to_string_pretty(ledger)?)?;
    }
    for tv in &cloud.variants {
        if let Some(enc) = &tv.encoder {
            enc.save(dir.join(format!("encoder-{}.json", tv.variant)))?;
        }
    }
    Ok(())
}

/// Runs all three phases for every configured dataset and writes reports
/// and the manifest under `cfg.output_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutcome> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out)?;
    let mut records = Vec::new();
    let mut datasets = Vec::new();
    let mut runs = Vec::new();
    for (di, spec) in cfg.datasets.iter().enumerate() {
        let client = client_prepare(spec, di, cfg)?;
        let root = out.join(&client.name);
        let client_dir = root.join("client");
        std::fs::create_dir_all(&client_dir)?;
        write_dataset(client_dir.join("train.csv"), &client.train, Some(client.split_seed), None)?;
        write_dataset(client_dir.join("test.csv"), &client.test, Some(client.split_seed), None)?;
        datasets.push(DatasetManifest {
            name: client.name.clone(),
            rows: client.train.n_rows() + client.test.n_rows(),
            train_rows: client.train.n_rows(),
            test_rows: client.test.n_rows(),
            split_seed: client.split_seed,
        });

        let train = &client.train;
        let real = cloud_real(train, cfg, di);
        write_cloud_run(&root.join("cloud").join("real"), &real)?;
        records.extend(client_evaluate(&client.name, &client.test, &real, cfg));

        if cfg.variants.iter().any(Variant::uses_synthetic) {
            let cloud_runs: Vec<CloudRun> = (1..=cfg.n_synthetic_runs)
                .into_par_iter()
                .map(|r| cloud_run(train, cfg, di, r))
                .collect::<Result<_>>()?;
            for cloud in &cloud_runs {
                write_cloud_run(&root.join("cloud").join(format!("run-{:02}", cloud.run)), cloud)?;
                let ledger = cloud.ledger.as_ref().expect("synthetic runs carry a ledger");
                runs.push(RunManifest {
                    dataset: client.name.clone(),
                    run: cloud.run,
                    gan_seed: cloud.gan_seed.expect("gan seed"),
                    sample_seed: cloud.sample_seed.expect("sample seed"),
                    critic_steps: ledger.steps,
                    epsilon: ledger.epsilon(),
                    delta: ledger.delta,
                    accountant: ledger.mode.as_str().to_string(),
                });
                records.extend(client_evaluate(&client.name, &client.test, cloud, cfg));
            }
        }
    }
    let report = emit_report(&records, cfg);
    write_report(&out.join("reports"), &records, &report)?;
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        datasets,
        runs,
    };
    std::fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(PipelineOutcome {
        records,
        report,
        manifest,
    })
}

/// Reruns the configuration stored in a manifest, optionally into a
/// different output directory.
pub fn rerun_manifest(manifest: &Manifest, output_dir: Option<PathBuf>) -> Result<PipelineOutcome> {
    let mut cfg = manifest.config.clone();
    if let Some(dir) = output_dir {
        cfg.output_dir = dir;
    }
    run_pipeline(&cfg)
}
