//! `churnkit` command-line driver.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 privacy
//! budget too small for a single critic step.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use churnkit::awoe::{AwoeEncoder, WoeMethod};
use churnkit::classifiers::{fit_classifier, ClassifierKind, ClassifierParams, ClassifierSpec, TrainedClassifier};
use churnkit::dpwgan::{train_dpwgan, AccountantMode, GanArtifact};
use churnkit::pipeline::{
    emit_report, epsilon_sweep, evaluate_model, q_sweep, rerun_manifest, run_pipeline, write_report, DatasetSpec,
    Manifest, PipelineConfig, PipelineError, RunRecord, Variant, DEFAULT_EPSILONS, DEFAULT_QS,
};
use churnkit::tabular::{
    preprocess, read_dataset, split_train_test, write_dataset, PreprocessConfig, PrivacyStamp, RawTable,
};

type Result<T> = std::result::Result<T, PipelineError>;

#[derive(Parser, Debug)]
#[command(name = "churnkit", version, about = "Privacy-preserving churn prediction pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Clean a raw CSV and write stratified train/test partitions.
    Preprocess(PreprocessArgs),
    /// Train a DP-WGAN on a training partition and sample a synthetic table.
    Synthesize(SynthesizeArgs),
    /// Fit a WOE encoder and apply it to a table.
    Transform(TransformArgs),
    /// Train one classifier and save it as JSON.
    Train(TrainArgs),
    /// Score a saved classifier on a test table.
    Evaluate(EvaluateArgs),
    /// Run the full three-phase experiment.
    Pipeline(PipelineArgs),
    /// Repeat the pipeline over a grid of q values.
    QSweep(QSweepArgs),
    /// Repeat the pipeline over a grid of privacy budgets.
    EpsilonSweep(EpsilonSweepArgs),
    /// Rebuild summary, rank and Wilcoxon reports from a runs.json file.
    Report(ReportArgs),
}

#[derive(Args, Debug, Default, Clone)]
struct AwoeFlags {
    /// Sample-count divisor for high-cardinality features.
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    unique_threshold: Option<usize>,
    /// Additive constant inside the log-ratio.
    #[arg(long)]
    adjustment: Option<f64>,
}

#[derive(Args, Debug, Default, Clone)]
struct GanFlags {
    /// Privacy budget epsilon.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Noise multiplier.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    clip_norm: Option<f64>,
    #[arg(long)]
    weight_clip: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Critic steps per generator step.
    #[arg(long)]
    critic_steps: Option<usize>,
    /// `strict` or `subsampled`.
    #[arg(long)]
    accountant: Option<String>,
    /// Hard cap on critic steps.
    #[arg(long)]
    max_steps: Option<u64>,
    #[arg(long)]
    gan_learning_rate: Option<f64>,
    /// Comma-separated hidden widths for generator and critic.
    #[arg(long, value_delimiter = ',')]
    gan_hidden: Option<Vec<usize>>,
    #[arg(long)]
    latent_dim: Option<usize>,
}

#[derive(Args, Debug, Default, Clone)]
struct ClassifierFlags {
    #[arg(long)]
    knn_k: Option<usize>,
    #[arg(long)]
    tree_depth: Option<usize>,
    #[arg(long)]
    tree_min_leaf: Option<usize>,
    #[arg(long)]
    rf_trees: Option<usize>,
    #[arg(long)]
    rf_max_features: Option<usize>,
    #[arg(long)]
    gb_trees: Option<usize>,
    #[arg(long)]
    gb_learning_rate: Option<f64>,
    #[arg(long)]
    gb_depth: Option<usize>,
    #[arg(long)]
    lr_learning_rate: Option<f64>,
    #[arg(long)]
    lr_epochs: Option<usize>,
    #[arg(long)]
    lr_l2: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    fnn_hidden: Option<Vec<usize>>,
    #[arg(long)]
    fnn_epochs: Option<usize>,
    #[arg(long)]
    fnn_learning_rate: Option<f64>,
}

#[derive(Args, Debug)]
struct PreprocessArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "churn")]
    target: String,
    /// Columns to drop (repeatable or comma-separated).
    #[arg(long = "drop", value_delimiter = ',')]
    drop: Vec<String>,
    #[arg(long, env = "CHURNKIT_OUTPUT_DIR", default_value = "churnkit-out")]
    output_dir: PathBuf,
    #[arg(long, default_value_t = 0.7)]
    train_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct SynthesizeArgs {
    /// Training partition written by `preprocess`.
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Rows to sample; defaults to the training row count.
    #[arg(long)]
    rows: Option<usize>,
    /// Where to save the generator, critic and ledger.
    #[arg(long)]
    model_out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    gan: GanFlags,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct TransformArgs {
    /// Table the encoder is fitted on.
    #[arg(long, required_unless_present = "encoder")]
    fit_on: Option<PathBuf>,
    /// Previously saved encoder instead of fitting one.
    #[arg(long, conflicts_with = "fit_on")]
    encoder: Option<PathBuf>,
    /// Tables to transform (repeatable).
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    /// Output paths, one per input.
    #[arg(long, required = true)]
    output: Vec<PathBuf>,
    #[arg(long)]
    encoder_out: Option<PathBuf>,
    /// Use the classic per-value encoder.
    #[arg(long)]
    vanilla_woe: bool,
    #[command(flatten)]
    awoe: AwoeFlags,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    train: PathBuf,
    /// nb, lr, knn, dtree, rf, gb or fnn.
    #[arg(long)]
    classifier: ClassifierKind,
    #[arg(long)]
    model_out: PathBuf,
    #[command(flatten)]
    params: ClassifierFlags,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Encoder applied to the test table before scoring.
    #[arg(long)]
    encoder: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Clone)]
struct PipelineFlags {
    /// JSON pipeline configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset CSV (repeatable); replaces the configured dataset list.
    #[arg(long)]
    dataset: Vec<PathBuf>,
    /// Target column for datasets given with --dataset.
    #[arg(long, default_value = "churn")]
    target: String,
    #[arg(long = "drop", value_delimiter = ',')]
    drop: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    variants: Option<Vec<Variant>>,
    #[arg(long, value_delimiter = ',')]
    classifier: Option<Vec<ClassifierKind>>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    synthetic_rows: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "CHURNKIT_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    vanilla_woe: bool,
    #[command(flatten)]
    awoe: AwoeFlags,
    #[command(flatten)]
    gan: GanFlags,
    #[command(flatten)]
    classifiers: ClassifierFlags,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    /// Rerun the configuration stored in a manifest.
    #[arg(long, conflicts_with = "config")]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    flags: PipelineFlags,
}

#[derive(Args, Debug)]
struct QSweepArgs {
    #[arg(long, value_delimiter = ',')]
    qs: Option<Vec<usize>>,
    #[command(flatten)]
    flags: PipelineFlags,
}

#[derive(Args, Debug)]
struct EpsilonSweepArgs {
    #[arg(long, value_delimiter = ',')]
    epsilons: Option<Vec<f64>>,
    #[command(flatten)]
    flags: PipelineFlags,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// runs.json written by `pipeline`.
    #[arg(long)]
    runs: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

fn config_err(msg: impl Into<String>) -> PipelineError {
    PipelineError::Config(msg.into())
}

impl AwoeFlags {
    fn apply(&self, cfg: &mut churnkit::AwoeConfig) {
        if let Some(q) = self.q {
            cfg.q = q;
        }
        if let Some(u) = self.unique_threshold {
            cfg.unique_threshold = u;
        }
        if let Some(a) = self.adjustment {
            cfg.adjustment = a;
        }
    }
}

impl GanFlags {
    fn apply(&self, cfg: &mut churnkit::GanConfig) -> Result<()> {
        macro_rules! set {
            ($flag:ident => $field:ident) => {
                if let Some(v) = self.$flag.clone() {
                    cfg.$field = v;
                }
            };
        }
        set!(epsilon => epsilon_budget);
        set!(delta => delta);
        set!(sigma => noise_multiplier);
        set!(clip_norm => clip_norm);
        set!(weight_clip => weight_clip);
        set!(batch_size => batch_size);
        set!(critic_steps => critic_steps_per_gen);
        set!(gan_learning_rate => learning_rate);
        set!(gan_hidden => hidden_layers);
        set!(latent_dim => latent_dim);
        if let Some(m) = self.max_steps {
            cfg.max_critic_steps = Some(m);
        }
        if let Some(a) = &self.accountant {
            cfg.accountant = a
                .parse::<AccountantMode>()
                .map_err(|_| config_err(format!("unknown accountant {a:?}")))?;
        }
        Ok(())
    }
}

impl ClassifierFlags {
    fn apply(&self, spec: &mut ClassifierSpec) {
        macro_rules! set {
            ($p:ident, $flag:ident => $field:ident) => {
                if let Some(v) = self.$flag.clone() {
                    $p.$field = v;
                }
            };
        }
        match &mut spec.params {
            ClassifierParams::Nb(_) => {}
            ClassifierParams::Knn(p) => set!(p, knn_k => k),
            ClassifierParams::DTree(p) => {
                set!(p, tree_depth => max_depth);
                set!(p, tree_min_leaf => min_leaf);
            }
            ClassifierParams::Rf(p) => {
                set!(p, rf_trees => trees);
                if self.rf_max_features.is_some() {
                    p.max_features = self.rf_max_features;
                }
            }
            ClassifierParams::Gb(p) => {
                set!(p, gb_trees => trees);
                set!(p, gb_learning_rate => learning_rate);
                set!(p, gb_depth => max_depth);
            }
            ClassifierParams::Lr(p) => {
                set!(p, lr_learning_rate => learning_rate);
                set!(p, lr_epochs => epochs);
                set!(p, lr_l2 => l2);
            }
            ClassifierParams::Fnn(p) => {
                set!(p, fnn_hidden => hidden);
                set!(p, fnn_epochs => epochs);
                set!(p, fnn_learning_rate => learning_rate);
            }
        }
    }
}

impl PipelineFlags {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if !self.dataset.is_empty() {
            cfg.datasets = self
                .dataset
                .iter()
                .map(|p| {
                    let mut d = DatasetSpec::new(p.clone(), self.target.clone());
                    d.drop_columns = self.drop.clone();
                    d
                })
                .collect();
        }
        if let Some(v) = &self.variants {
            cfg.variants = v.clone();
        }
        if self.vanilla_woe && !cfg.variants.contains(&Variant::WoeVanilla) {
            cfg.variants.push(Variant::WoeVanilla);
        }
        if let Some(kinds) = &self.classifier {
            cfg.classifiers = kinds.iter().map(|&k| ClassifierSpec::default_for(k)).collect();
        }
        for spec in &mut cfg.classifiers {
            self.classifiers.apply(spec);
        }
        if let Some(r) = self.runs {
            cfg.n_synthetic_runs = r;
        }
        if let Some(f) = self.train_fraction {
            cfg.train_fraction = f;
        }
        if self.synthetic_rows.is_some() {
            cfg.synthetic_rows = self.synthetic_rows;
        }
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(o) = &self.output_dir {
            cfg.output_dir = o.clone();
        }
        self.awoe.apply(&mut cfg.awoe);
        self.gan.apply(&mut cfg.gan)?;
        Ok(cfg)
    }
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn cmd_preprocess(a: &PreprocessArgs) -> Result<()> {
    let raw = RawTable::from_path(&a.input)?;
    let cfg = PreprocessConfig::new(a.target.clone()).with_drop_columns(a.drop.iter().cloned());
    let data = preprocess(&raw, &cfg)?;
    let (train, test) = split_train_test(&data, a.train_fraction, a.seed)?;
    std::fs::create_dir_all(&a.output_dir)?;
    write_dataset(a.output_dir.join("dataset.csv"), &data, None, None)?;
    write_dataset(a.output_dir.join("train.csv"), &train, Some(a.seed), None)?;
    write_dataset(a.output_dir.join("test.csv"), &test, Some(a.seed), None)?;
    print_json(&serde_json::json!({
        "rows": data.n_rows(),
        "columns": data.schema().len(),
        "train_rows": train.n_rows(),
        "test_rows": test.n_rows(),
        "output_dir": a.output_dir,
    }))
}

fn cmd_synthesize(a: &SynthesizeArgs) -> Result<()> {
    let (train, _) = read_dataset(&a.train)?;
    let mut gan = match &a.config {
        Some(p) => PipelineConfig::load(p)?.gan,
        None => churnkit::GanConfig::default(),
    };
    a.gan.apply(&mut gan)?;
    let (model, ledger) = train_dpwgan(&train, &gan, a.seed)?;
    let n = a.rows.unwrap_or(train.n_rows());
    let sample_seed = churnkit::pipeline::derive_seed(a.seed, 1);
    let syn = model.sample_synthetic(n, sample_seed)?;
    let stamp = PrivacyStamp {
        epsilon: ledger.epsilon(),
        delta: ledger.delta,
        accountant: ledger.mode.as_str().to_string(),
    };
    write_dataset(&a.output, &syn, Some(sample_seed), Some(stamp))?;
    if let Some(p) = &a.model_out {
        GanArtifact {
            model,
            ledger: ledger.clone(),
        }
        .save(p)?;
    }
    print_json(&serde_json::json!({
        "rows": n,
        "critic_steps": ledger.steps,
        "epsilon": ledger.epsilon(),
        "delta": ledger.delta,
        "accountant": ledger.mode.as_str(),
    }))
}

fn cmd_transform(a: &TransformArgs) -> Result<()> {
    if a.input.len() != a.output.len() {
        return Err(config_err("--input and --output must be given the same number of times"));
    }
    let enc = match (&a.encoder, &a.fit_on) {
        (Some(p), _) => AwoeEncoder::load(p)?,
        (None, Some(p)) => {
            let (fit_on, _) = read_dataset(p)?;
            let mut cfg = churnkit::AwoeConfig::default();
            a.awoe.apply(&mut cfg);
            let method = if a.vanilla_woe {
                WoeMethod::Vanilla
            } else {
                WoeMethod::Adaptive
            };
            AwoeEncoder::fit(&fit_on, &cfg, method)?
        }
        (None, None) => return Err(config_err("either --fit-on or --encoder is required")),
    };
    if let Some(p) = &a.encoder_out {
        enc.save(p)?;
    }
    for (i, o) in a.input.iter().zip(&a.output) {
        let (d, meta) = read_dataset(i)?;
        write_dataset(o, &enc.transform(&d)?, meta.seed, meta.privacy)?;
    }
    Ok(())
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let (train, _) = read_dataset(&a.train)?;
    let mut spec = ClassifierSpec::default_for(a.classifier).with_seed(a.seed);
    a.params.apply(&mut spec);
    let model = fit_classifier(&spec, &train)?;
    std::fs::write(&a.model_out, serde_json::to_string(&model)?)?;
    print_json(&serde_json::json!({ "classifier": a.classifier, "spec": spec }))
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let model: TrainedClassifier = serde_json::from_str(&std::fs::read_to_string(&a.model)?)?;
    let (mut test, _) = read_dataset(&a.test)?;
    if let Some(p) = &a.encoder {
        test = AwoeEncoder::load(p)?.transform(&test)?;
    }
    let metrics = evaluate_model(&model, &test)?;
    if let Some(o) = &a.output {
        std::fs::write(o, serde_json::to_string_pretty(&metrics)?)?;
    }
    print_json(&serde_json::to_value(metrics)?)
}

fn summarize_outcome(out: &Path) -> Result<()> {
    print_json(&serde_json::json!({ "reports": out.join("reports"), "manifest": out.join("manifest.json") }))
}

fn cmd_pipeline(a: &PipelineArgs) -> Result<()> {
    let outcome = match &a.manifest {
        Some(p) => rerun_manifest(&Manifest::load(p)?, a.flags.output_dir.clone())?,
        None => run_pipeline(&a.flags.resolve()?)?,
    };
    summarize_outcome(&outcome.manifest.config.output_dir)
}

fn cmd_q_sweep(a: &QSweepArgs) -> Result<()> {
    let cfg = a.flags.resolve()?;
    let qs = a.qs.clone().unwrap_or_else(|| DEFAULT_QS.to_vec());
    q_sweep(&cfg, &qs)?;
    print_json(&serde_json::json!({ "sweep": cfg.output_dir.join("q_sweep.csv") }))
}

fn cmd_epsilon_sweep(a: &EpsilonSweepArgs) -> Result<()> {
    let cfg = a.flags.resolve()?;
    let eps = a.epsilons.clone().unwrap_or_else(|| DEFAULT_EPSILONS.to_vec());
    epsilon_sweep(&cfg, &eps)?;
    print_json(&serde_json::json!({
        "sweep": cfg.output_dir.join("epsilon_sweep.csv"),
        "accuracy": cfg.output_dir.join("epsilon_accuracy.csv"),
    }))
}

fn cmd_report(a: &ReportArgs) -> Result<()> {
    let records: Vec<RunRecord> = serde_json::from_str(&std::fs::read_to_string(&a.runs)?)?;
    let n = records.iter().map(|r| r.classifier_index + 1).max().unwrap_or(0);
    let mut kinds = vec![None; n];
    for r in &records {
        kinds[r.classifier_index] = Some(r.classifier);
    }
    let cfg = PipelineConfig {
        classifiers: kinds
            .into_iter()
            .map(|k| ClassifierSpec::default_for(k.unwrap_or(ClassifierKind::Nb)))
            .collect(),
        alpha: a.alpha,
        ..PipelineConfig::default()
    };
    let report = emit_report(&records, &cfg);
    write_report(&a.output_dir, &records, &report)?;
    summarize_outcome(&a.output_dir)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Preprocess(a) => cmd_preprocess(a),
        Command::Synthesize(a) => cmd_synthesize(a),
        Command::Transform(a) => cmd_transform(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Pipeline(a) => cmd_pipeline(a),
        Command::QSweep(a) => cmd_q_sweep(a),
        Command::EpsilonSweep(a) => cmd_epsilon_sweep(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
