use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{sigmoid, Standardizer};
use crate::nn::{Adam, Mlp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FnnParams {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for FnnParams {
    fn default() -> Self {
        Self {
            hidden: vec![64],
            epochs: 50,
            learning_rate: 1e-3,
            batch_size: 32,
        }
    }
}

/// ReLU network with one logit output trained on binary cross-entropy by
/// mini-batch Adam over standardized inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedForward {
    net: Mlp,
    scaler: Standardizer,
}

/// Mean cross-entropy over `rows` and its gradient with respect to the
/// network parameters.
pub(crate) fn batch_loss_and_gradient(net: &Mlp, x: &[Vec<f64>], y: &[u8], rows: &[usize]) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; net.n_params()];
    let mut loss = 0.0;
    let scale = 1.0 / rows.len() as f64;
    for &i in rows {
        let trace = net.forward_trace(&x[i]);
        let z = trace.output()[0];
        let t = f64::from(y[i]);
        loss += z.max(0.0) + (-z.abs()).exp().ln_1p() - t * z;
        net.backward(&trace, &[(sigmoid(z) - t) * scale], &mut grad);
    }
    (loss * scale, grad)
}

impl FeedForward {
    pub(crate) fn fit(p: &FnnParams, x: &[Vec<f64>], y: &[u8], seed: u64) -> Self {
        let scaler = Standardizer::fit(x);
        let xs: Vec<Vec<f64>> = x.iter().map(|r| scaler.apply(r)).collect();
        let mut sizes = vec![scaler.width()];
        sizes.extend(&p.hidden);
        sizes.push(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Mlp::new(&sizes, &mut rng);
        let mut opt = Adam::new(net.n_params(), p.learning_rate);
        let mut order: Vec<usize> = (0..xs.len()).collect();
        for _ in 0..p.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(p.batch_size) {
                let (_, grad) = batch_loss_and_gradient(&net, &xs, y, batch);
                opt.step(net.params_mut(), &grad);
            }
        }
        Self { net, scaler }
    }

    pub fn width(&self) -> usize {
        self.scaler.width()
    }

    pub(crate) fn score(&self, row: &[f64]) -> f64 {
        sigmoid(self.net.forward(&self.scaler.apply(row))[0])
    }
}
