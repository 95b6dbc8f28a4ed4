//! Differentially-private Wasserstein GAN for mixed-type tables.
//!
//! The critic is trained DP-SGD style: per-example gradients of the
//! Wasserstein loss are clipped to `clip_norm`, summed, perturbed with
//! Gaussian noise of standard deviation `noise_multiplier * clip_norm`,
//! averaged and applied by plain gradient descent, after which every critic
//! parameter is clamped to `[-weight_clip, weight_clip]`. The generator
//! only ever sees the critic, so its updates and all sampling are
//! post-processing and cost nothing in the [`PrivacyLedger`].

mod codec;
mod ledger;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::Mlp;
use crate::tabular::{Dataset, Provenance, TabularError};

pub use codec::{MixedCodec, Segment};
pub use ledger::{privacy_compose, step_rho, zcdp_to_epsilon, AccountantMode, PrivacyLedger};

#[derive(Debug, Error)]
pub enum GanError {
    #[error("privacy budget exhausted: next step would reach epsilon {next:.4} > budget {budget}")]
    BudgetExhausted { next: f64, budget: f64 },
    #[error("privacy budget {budget} is too small for a single critic step (one step costs epsilon {one_step:.4})")]
    BudgetTooSmall { budget: f64, one_step: f64 },
    #[error("invalid GAN configuration: {0}")]
    InvalidConfig(String),
    #[error("training data must be non-empty and contain both classes")]
    UnusableData,
    #[error("value {value} of column {column} is outside the schema")]
    OutOfSchema { column: String, value: f64 },
    #[error("dataset schema differs from the codec schema")]
    SchemaMismatch,
    #[error("row width {found} does not match codec width {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Tabular(#[from] TabularError),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GanError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GanConfig {
    pub latent_dim: usize,
    pub hidden_layers: Vec<usize>,
    pub critic_steps_per_gen: usize,
    pub weight_clip: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub noise_multiplier: f64,
    pub epsilon_budget: f64,
    pub delta: f64,
    pub accountant: AccountantMode,
    /// Optional cap on critic steps, independent of the budget.
    pub max_critic_steps: Option<u64>,
}

impl Default for GanConfig {
    fn default() -> Self {
        Self {
            latent_dim: 64,
            hidden_layers: vec![128, 128],
            critic_steps_per_gen: 5,
            weight_clip: 0.01,
            batch_size: 64,
            learning_rate: 5e-5,
            clip_norm: 1.0,
            noise_multiplier: 2.0,
            epsilon_budget: 10.0,
            delta: 1e-5,
            accountant: AccountantMode::Subsampled,
            max_critic_steps: None,
        }
    }
}

impl GanConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(GanError::InvalidConfig(m.to_string()));
        if self.latent_dim == 0 || self.batch_size == 0 || self.critic_steps_per_gen == 0 {
            return bad("latent_dim, batch_size and critic_steps_per_gen must be positive");
        }
        if self.hidden_layers.iter().any(|&h| h == 0) {
            return bad("hidden layer widths must be positive");
        }
        for (name, v) in [
            ("weight_clip", self.weight_clip),
            ("learning_rate", self.learning_rate),
            ("clip_norm", self.clip_norm),
            ("noise_multiplier", self.noise_multiplier),
            ("epsilon_budget", self.epsilon_budget),
        ] {
            if !(v > 0.0) || v.is_nan() {
                return Err(GanError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0, 1)");
        }
        Ok(())
    }

    pub fn ledger(&self, sampling_rate: f64) -> PrivacyLedger {
        PrivacyLedger::new(
            self.noise_multiplier,
            self.clip_norm,
            sampling_rate,
            self.accountant,
            self.epsilon_budget,
            self.delta,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GanModel {
    pub generator: Mlp,
    pub critic: Mlp,
    pub codec: MixedCodec,
    pub config: GanConfig,
    pub seed: u64,
}

/// Persisted model: parameters, config, seed and the final ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GanArtifact {
    pub model: GanModel,
    pub ledger: PrivacyLedger,
}

impl GanArtifact {
    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticStep {
    /// mean critic(fake) - mean critic(real), before the update.
    pub loss: f64,
    pub rho_increment: f64,
}

/// Rescales `g` onto the L2 ball of radius `c` when it lies outside.
pub fn clip_gradient(g: &[f64], c: f64) -> Vec<f64> {
    let mut out = g.to_vec();
    clip_in_place(&mut out, c);
    out
}

fn clip_in_place(g: &mut [f64], c: f64) {
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > c {
        let s = c / norm;
        g.iter_mut().for_each(|v| *v *= s);
    }
}

/// Adds N(0, (sigma * clip)^2) noise to every coordinate of a summed gradient.
pub fn add_gaussian_noise<R: Rng + ?Sized>(sum: &mut [f64], sigma: f64, clip: f64, rng: &mut R) {
    let normal = Normal::new(0.0, sigma * clip).expect("finite non-negative std");
    for v in sum.iter_mut() {
        *v += normal.sample(rng);
    }
}

/// Gradient of `critic(fake) - critic(real)` with respect to the critic
/// parameters for one (real, fake) pair.
pub fn critic_example_gradient(critic: &Mlp, real: &[f64], fake: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; critic.n_params()];
    accumulate_pair_gradient(critic, real, fake, &mut g);
    g
}

fn accumulate_pair_gradient(critic: &Mlp, real: &[f64], fake: &[f64], g: &mut [f64]) -> f64 {
    let tf = critic.forward_trace(fake);
    let tr = critic.forward_trace(real);
    critic.backward(&tf, &[1.0], g);
    critic.backward(&tr, &[-1.0], g);
    tf.output()[0] - tr.output()[0]
}

impl GanModel {
    pub fn new(codec: MixedCodec, config: GanConfig, seed: u64, rng: &mut ChaCha8Rng) -> Self {
        let width = codec.width();
        let mut gen_sizes = vec![config.latent_dim];
        gen_sizes.extend(&config.hidden_layers);
        gen_sizes.push(width);
        let mut critic_sizes = vec![width];
        critic_sizes.extend(&config.hidden_layers);
        critic_sizes.push(1);
        let generator = Mlp::new(&gen_sizes, rng);
        let mut critic = Mlp::new(&critic_sizes, rng);
        critic.clamp_params(config.weight_clip);
        Self {
            generator,
            critic,
            codec,
            config,
            seed,
        }
    }

    fn latent<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.config.latent_dim).map(|_| StandardNormal.sample(rng)).collect()
    }

    /// One encoded fake row from fresh latent noise.
    pub fn generate_encoded<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z = self.latent(rng);
        self.codec.activate(&self.generator.forward(&z))
    }

    pub fn critic_score(&self, encoded: &[f64]) -> f64 {
        self.critic.forward(encoded)[0]
    }

    /// One private critic update on `real_batch` (encoded rows). Refused
    /// without touching the model when the ledger cannot afford it.
    pub fn noisy_critic_step<R: Rng + ?Sized>(
        &mut self,
        real_batch: &[Vec<f64>],
        ledger: &mut PrivacyLedger,
        rng: &mut R,
    ) -> Result<CriticStep> {
        if !ledger.can_step() {
            return Err(GanError::BudgetExhausted {
                next: ledger.epsilon_after(ledger.steps + 1),
                budget: ledger.budget,
            });
        }
        let b = real_batch.len();
        let fakes: Vec<Vec<f64>> = (0..b).map(|_| self.generate_encoded(rng)).collect();
        let n = self.critic.n_params();
        let mut sum = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        let mut loss = 0.0;
        for (real, fake) in real_batch.iter().zip(&fakes) {
            scratch.iter_mut().for_each(|v| *v = 0.0);
            loss += accumulate_pair_gradient(&self.critic, real, fake, &mut scratch);
            clip_in_place(&mut scratch, self.config.clip_norm);
            sum.iter_mut().zip(&scratch).for_each(|(s, g)| *s += g);
        }
        add_gaussian_noise(&mut sum, self.config.noise_multiplier, self.config.clip_norm, rng);
        let inv = 1.0 / b as f64;
        sum.iter_mut().for_each(|v| *v *= inv);
        self.critic.sgd_step(&sum, self.config.learning_rate);
        self.critic.clamp_params(self.config.weight_clip);
        let rho_increment = ledger.record_step();
        Ok(CriticStep {
            loss: loss * inv,
            rho_increment,
        })
    }

    /// Non-private reference critic step: batch-mean gradient without
    /// clipping or noise. Draws fakes from `rng` exactly as
    /// [`noisy_critic_step`](Self::noisy_critic_step) does.
    pub fn plain_critic_step<R: Rng + ?Sized>(&mut self, real_batch: &[Vec<f64>], rng: &mut R) -> f64 {
        let b = real_batch.len();
        let fakes: Vec<Vec<f64>> = (0..b).map(|_| self.generate_encoded(rng)).collect();
        let mut g = vec![0.0; self.critic.n_params()];
        let mut loss = 0.0;
        for (real, fake) in real_batch.iter().zip(&fakes) {
            loss += accumulate_pair_gradient(&self.critic, real, fake, &mut g);
        }
        let inv = 1.0 / b as f64;
        g.iter_mut().for_each(|v| *v *= inv);
        self.critic.sgd_step(&g, self.config.learning_rate);
        self.critic.clamp_params(self.config.weight_clip);
        loss * inv
    }

    /// Moves the generator to increase mean critic(fake). Uses no real data.
    /// Returns the generator loss `-mean critic(fake)` before the update.
    pub fn generator_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let b = self.config.batch_size;
        let mut g_gen = vec![0.0; self.generator.n_params()];
        let mut critic_scratch = vec![0.0; self.critic.n_params()];
        let mut loss = 0.0;
        let scale = -1.0 / b as f64;
        for _ in 0..b {
            let z = self.latent(rng);
            let tg = self.generator.forward_trace(&z);
            let fake = self.codec.activate(tg.output());
            let tc = self.critic.forward_trace(&fake);
            loss -= tc.output()[0];
            let d_fake = self.critic.backward(&tc, &[scale], &mut critic_scratch);
            let d_logits = self.codec.activate_backward(&fake, &d_fake);
            self.generator.backward(&tg, &d_logits, &mut g_gen);
        }
        self.generator.sgd_step(&g_gen, self.config.learning_rate);
        loss / b as f64
    }

    /// Draws `n` synthetic rows; the run id is derived from `seed`.
    pub fn sample_synthetic(&self, n: usize, seed: u64) -> Result<Dataset> {
        self.sample_synthetic_as(n, seed, format!("seed-{seed:016x}"))
    }

    pub fn sample_synthetic_as(&self, n: usize, seed: u64, run_id: String) -> Result<Dataset> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m: Vec<Vec<f64>> = (0..n).map(|_| self.generate_encoded(&mut rng)).collect();
        self.codec.decode(&m, Provenance::Synthetic { run_id })
    }
}

/// Trains a private WGAN on `train`, alternating `critic_steps_per_gen`
/// noisy critic steps with one generator step until the next critic step
/// would overrun the budget or the optional step cap is hit.
pub fn train_dpwgan(train: &Dataset, cfg: &GanConfig, seed: u64) -> Result<(GanModel, PrivacyLedger)> {
    cfg.validate()?;
    let (pos, neg) = train.class_counts();
    if pos == 0 || neg == 0 {
        return Err(GanError::UnusableData);
    }
    let codec = MixedCodec::fit(train);
    let encoded = codec.encode(train)?;
    let n = encoded.len();
    let batch = cfg.batch_size.min(n);
    let mut ledger = cfg.ledger(batch as f64 / n as f64);
    if !ledger.can_step() {
        return Err(GanError::BudgetTooSmall {
            budget: cfg.epsilon_budget,
            one_step: ledger.epsilon_after(1),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = GanModel::new(codec, cfg.clone(), seed, &mut rng);
    let cap = cfg.max_critic_steps.unwrap_or(u64::MAX);
    let mut real_batch: Vec<Vec<f64>> = Vec::with_capacity(batch);
    'outer: loop {
        let mut stepped = false;
        for _ in 0..cfg.critic_steps_per_gen {
            if ledger.steps >= cap || !ledger.can_step() {
                if stepped {
                    model.generator_step(&mut rng);
                }
                break 'outer;
            }
            real_batch.clear();
            real_batch.extend(index::sample(&mut rng, n, batch).into_iter().map(|i| encoded[i].clone()));
            model.noisy_critic_step(&real_batch, &mut ledger, &mut rng)?;
            stepped = true;
        }
        model.generator_step(&mut rng);
    }
    Ok((model, ledger))
}

/// Convenience wrapper matching [`GanModel::sample_synthetic`].
pub fn sample_synthetic(model: &GanModel, n: usize, seed: u64) -> Result<Dataset> {
    model.sample_synthetic(n, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{Column, Schema};

    fn toy(n: usize) -> Dataset {
        let schema = Schema::new(vec![
            Column::numeric("a"),
            Column::categorical("c", vec!["x".into(), "y".into(), "z".into()]),
            Column::label("y"),
        ])
        .unwrap();
        let rows = (0..n)
            .map(|i| vec![(i % 17) as f64 * 0.3, (i % 3) as f64, (i % 4 == 0) as u8 as f64])
            .collect();
        Dataset::new(schema, rows, Provenance::Real).unwrap()
    }

    fn small_cfg() -> GanConfig {
        GanConfig {
            latent_dim: 4,
            hidden_layers: vec![8],
            batch_size: 8,
            accountant: AccountantMode::Strict,
            ..GanConfig::default()
        }
    }

    #[test]
    fn clip_examples() {
        assert_eq!(clip_gradient(&[0.3, 0.4], 1.0), vec![0.3, 0.4]);
        let c = clip_gradient(&[6.0, 8.0], 1.0);
        assert!((c[0] - 0.6).abs() < 1e-15 && (c[1] - 0.8).abs() < 1e-15);
        assert_eq!(clip_gradient(&[0.0, 0.0], 1.0), vec![0.0, 0.0]);
    }

    #[test]
    fn critic_step_clamps_and_charges() {
        let d = toy(40);
        let codec = MixedCodec::fit(&d);
        let enc = codec.encode(&d).unwrap();
        let cfg = small_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut m = GanModel::new(codec, cfg.clone(), 5, &mut rng);
        let mut ledger = cfg.ledger(1.0);
        let step = m.noisy_critic_step(&enc[..8], &mut ledger, &mut rng).unwrap();
        assert_eq!(step.rho_increment, 0.125);
        assert!(m.critic.max_abs_param() <= 0.01);
        assert_eq!(ledger.steps, 1);
    }

    #[test]
    fn exhausted_budget_leaves_model_untouched() {
        let d = toy(40);
        let codec = MixedCodec::fit(&d);
        let enc = codec.encode(&d).unwrap();
        let cfg = small_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut m = GanModel::new(codec, cfg.clone(), 5, &mut rng);
        let mut ledger = cfg.ledger(1.0);
        ledger.steps = ledger.step_cap();
        ledger.rho = ledger.steps as f64 * ledger.step_cost();
        let before = m.clone();
        let err = m.noisy_critic_step(&enc[..8], &mut ledger, &mut rng).unwrap_err();
        assert!(matches!(err, GanError::BudgetExhausted { .. }));
        assert_eq!(m, before);
    }

    #[test]
    fn degenerate_noise_matches_plain_step() {
        let d = toy(40);
        let codec = MixedCodec::fit(&d);
        let enc = codec.encode(&d).unwrap();
        let cfg = GanConfig {
            noise_multiplier: 1e-150,
            clip_norm: 1e100,
            epsilon_budget: f64::MAX,
            weight_clip: 1.0,
            learning_rate: 0.05,
            ..small_cfg()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let base = GanModel::new(codec, cfg.clone(), 11, &mut rng);
        let (mut private, mut plain) = (base.clone(), base);
        let mut ledger = cfg.ledger(1.0);
        let mut r1 = ChaCha8Rng::seed_from_u64(99);
        let mut r2 = ChaCha8Rng::seed_from_u64(99);
        let a = private.noisy_critic_step(&enc[..8], &mut ledger, &mut r1).unwrap();
        let b = plain.plain_critic_step(&enc[..8], &mut r2);
        assert!((a.loss - b).abs() < 1e-15);
        for (x, y) in private.critic.params().iter().zip(plain.critic.params()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn generator_step_is_free_and_deterministic() {
        let d = toy(40);
        let codec = MixedCodec::fit(&d);
        let cfg = small_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = GanModel::new(codec, cfg.clone(), 1, &mut rng);
        let ledger = cfg.ledger(0.2);
        let (mut a, mut b) = (m.clone(), m);
        for _ in 0..3 {
            a.generator_step(&mut ChaCha8Rng::seed_from_u64(4));
            b.generator_step(&mut ChaCha8Rng::seed_from_u64(4));
        }
        assert_eq!(a, b);
        assert_eq!(ledger.steps, 0);
    }

    #[test]
    fn constant_critic_gives_zero_generator_gradient() {
        let d = toy(40);
        let codec = MixedCodec::fit(&d);
        let cfg = small_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut m = GanModel::new(codec, cfg, 1, &mut rng);
        // zero weights leave only the output bias: critic(x) is constant
        let n = m.critic.n_params();
        m.critic.params_mut().iter_mut().take(n - 1).for_each(|p| *p = 0.0);
        m.critic.params_mut()[n - 1] = 0.005;
        let before = m.generator.clone();
        m.generator_step(&mut rng);
        assert_eq!(m.generator, before);
    }

    #[test]
    fn training_respects_budget_and_is_deterministic() {
        let d = toy(60);
        let cfg = small_cfg();
        let (m1, l1) = train_dpwgan(&d, &cfg, 3).unwrap();
        let (m2, l2) = train_dpwgan(&d, &cfg, 3).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(l1, l2);
        assert_eq!(l1.steps, l1.step_cap());
        assert!(l1.epsilon() <= 10.0);
    }

    #[test]
    fn budget_too_small() {
        let cfg = GanConfig {
            epsilon_budget: 1e-3,
            ..small_cfg()
        };
        assert!(matches!(
            train_dpwgan(&toy(20), &cfg, 0),
            Err(GanError::BudgetTooSmall { .. })
        ));
    }

    #[test]
    fn sampling_contract() {
        let d = toy(60);
        let (m, ledger) = train_dpwgan(&d, &small_cfg(), 8).unwrap();
        let s1 = m.sample_synthetic(25, 1).unwrap();
        let s2 = m.sample_synthetic(25, 2).unwrap();
        assert_eq!(s1.n_rows(), 25);
        assert_eq!(s1.schema(), d.schema());
        assert_ne!(s1.rows(), s2.rows());
        assert!(matches!(s1.provenance(), Provenance::Synthetic { .. }));
        let (lo, hi) = (0.0, 16.0 * 0.3);
        assert!(s1.rows().iter().all(|r| r[0] >= lo && r[0] <= hi));
        let steps = ledger.steps;
        let _ = m.sample_synthetic(10, 3).unwrap();
        assert_eq!(ledger.steps, steps);
    }
}
