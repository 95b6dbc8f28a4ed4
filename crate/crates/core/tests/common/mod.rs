#![allow(dead_code)]

use std::path::{Path, PathBuf};

use churnkit::classifiers::{ClassifierKind, ClassifierParams, ClassifierSpec};
use churnkit::dpwgan::GanConfig;
use churnkit::pipeline::{DatasetSpec, PipelineConfig, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Writes a small telecom-like table with a Yes/No `churn` column and an id
/// column, returning its path.
pub fn write_toy_csv(dir: &Path, name: &str, rows: usize, seed: u64) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let path = dir.join(format!("{name}.csv"));
    let mut w = csv::Writer::from_path(&path).unwrap();
    w.write_record(["id", "tenure", "monthly", "contract", "calls", "churn"]).unwrap();
    let contracts = ["month", "one-year", "two-year"];
    for i in 0..rows {
        let tenure: u32 = rng.random_range(0..72);
        let contract = rng.random_range(0..3);
        let calls: u32 = rng.random_range(0..8);
        let monthly = 20.0 + rng.random::<f64>() * 90.0;
        let logit = 1.2 - 0.05 * f64::from(tenure) - 0.9 * contract as f64 + 0.35 * f64::from(calls)
            + 0.01 * (monthly - 60.0);
        let churn = rng.random::<f64>() < 1.0 / (1.0 + (-logit).exp());
        let monthly = if i % 37 == 5 { String::new() } else { format!("{monthly:.2}") };
        w.write_record([
            format!("C{i:05}"),
            tenure.to_string(),
            monthly,
            contracts[contract].to_string(),
            calls.to_string(),
            if churn { "Yes" } else { "No" }.to_string(),
        ])
        .unwrap();
    }
    w.flush().unwrap();
    path
}

pub fn small_gan() -> GanConfig {
    GanConfig {
        latent_dim: 4,
        hidden_layers: vec![12],
        batch_size: 32,
        learning_rate: 0.01,
        weight_clip: 0.1,
        critic_steps_per_gen: 2,
        max_critic_steps: Some(120),
        ..GanConfig::default()
    }
}

pub fn small_classifiers() -> Vec<ClassifierSpec> {
    ClassifierKind::ALL
        .into_iter()
        .map(|k| {
            let mut spec = ClassifierSpec::default_for(k);
            match &mut spec.params {
                ClassifierParams::Rf(p) => p.trees = 12,
                ClassifierParams::Gb(p) => p.trees = 12,
                ClassifierParams::Fnn(p) => {
                    p.epochs = 5;
                    p.hidden = vec![8];
                }
                _ => {}
            }
            spec
        })
        .collect()
}

pub fn toy_config(csvs: &[PathBuf], out: &Path) -> PipelineConfig {
    PipelineConfig {
        datasets: csvs
            .iter()
            .map(|p| DatasetSpec {
                drop_columns: vec!["id".into()],
                ..DatasetSpec::new(p, "churn")
            })
            .collect(),
        variants: Variant::ALL.to_vec(),
        gan: small_gan(),
        classifiers: small_classifiers(),
        n_synthetic_runs: 2,
        master_seed: 11,
        output_dir: out.to_path_buf(),
        ..PipelineConfig::default()
    }
}

/// Every regular file under `root`, keyed by its path relative to `root`.
pub fn file_tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let bytes = std::fs::read(&path).unwrap();
                out.push((path.strip_prefix(root).unwrap().to_path_buf(), bytes));
            }
        }
    }
    out.sort();
    out
}
