use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sigmoid;
use super::tree::{grow, GrowParams, Target, Tree};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbParams {
    pub trees: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for GbParams {
    fn default() -> Self {
        Self {
            trees: 100,
            learning_rate: 0.1,
            max_depth: 3,
            min_leaf: 1,
        }
    }
}

/// Gradient boosting on the logistic loss. Each stage fits a squared-error
/// regression tree to the residuals `y - p` and sets leaf values by one
/// Newton step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoosting {
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

impl GradientBoosting {
    pub(crate) fn fit(p: &GbParams, x: &[Vec<f64>], y: &[u8]) -> Self {
        let n = x.len();
        let churn = y.iter().filter(|&&v| v == 1).count() as f64;
        let base_score = (churn / (n as f64 - churn)).ln();
        let mut f = vec![base_score; n];
        let params = GrowParams {
            max_depth: Some(p.max_depth),
            min_leaf: p.min_leaf,
            max_features: None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut trees = Vec::with_capacity(p.trees);
        for _ in 0..p.trees {
            let prob: Vec<f64> = f.iter().map(|&z| sigmoid(z)).collect();
            let resid: Vec<f64> = y.iter().zip(&prob).map(|(&t, &q)| f64::from(t) - q).collect();
            let newton = |rows: &[usize]| {
                let num: f64 = rows.iter().map(|&i| resid[i]).sum();
                let den: f64 = rows.iter().map(|&i| prob[i] * (1.0 - prob[i])).sum();
                num / den.max(1e-12)
            };
            let tree = grow(
                x,
                y,
                &Target::Regression(&resid),
                (0..n).collect(),
                &params,
                &mut rng,
                &newton,
            );
            for (fi, row) in f.iter_mut().zip(x) {
                *fi += p.learning_rate * tree.leaf_value(row);
            }
            trees.push(tree);
        }
        Self {
            base_score,
            learning_rate: p.learning_rate,
            trees,
        }
    }

    pub fn width(&self) -> usize {
        self.trees[0].width
    }

    pub fn raw_score(&self, row: &[f64]) -> f64 {
        self.base_score + self.learning_rate * self.trees.iter().map(|t| t.leaf_value(row)).sum::<f64>()
    }

    pub(crate) fn score(&self, row: &[f64]) -> f64 {
        sigmoid(self.raw_score(row))
    }
}
