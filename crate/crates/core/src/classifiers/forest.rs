use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{churn_fraction, grow, GrowParams, Target, Tree};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfParams {
    pub trees: usize,
    /// Features tried per split; `None` means `floor(sqrt(d))`.
    pub max_features: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl Default for RfParams {
    fn default() -> Self {
        Self {
            trees: 100,
            max_features: None,
            max_depth: None,
            min_leaf: 1,
        }
    }
}

/// Bootstrap-aggregated CART trees with per-split feature subsampling. The
/// score is the fraction of trees voting churn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<Tree>,
}

/// Independent per-tree stream so trees can grow in any order.
fn tree_seed(seed: u64, t: usize) -> u64 {
    crate::pipeline::derive_seed(seed, t as u64)
}

impl RandomForest {
    pub(crate) fn fit(p: &RfParams, x: &[Vec<f64>], y: &[u8], seed: u64) -> Self {
        let d = x[0].len();
        let params = GrowParams {
            max_depth: p.max_depth,
            min_leaf: p.min_leaf,
            max_features: Some(p.max_features.unwrap_or(((d as f64).sqrt().floor() as usize).max(1))),
        };
        let n = x.len();
        let leaf = churn_fraction(y);
        let trees = (0..p.trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(seed, t));
                let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                grow(x, y, &Target::Class, idx, &params, &mut rng, &leaf)
            })
            .collect();
        Self { trees }
    }

    pub fn width(&self) -> usize {
        self.trees[0].width
    }

    pub(crate) fn score(&self, row: &[f64]) -> f64 {
        let votes = self.trees.iter().filter(|t| t.leaf_value(row) >= 0.5).count();
        votes as f64 / self.trees.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::Node;

    #[test]
    fn unanimous_vote_scores_one() {
        let leaf = |v| Tree {
            nodes: vec![Node::Leaf { value: v, counts: [0, 1] }],
            width: 1,
        };
        let f = RandomForest {
            trees: vec![leaf(1.0), leaf(0.9), leaf(0.6)],
        };
        assert_eq!(f.score(&[0.0]), 1.0);
        let f = RandomForest {
            trees: vec![leaf(1.0), leaf(0.2), leaf(0.1), leaf(0.0)],
        };
        assert_eq!(f.score(&[0.0]), 0.25);
    }

    #[test]
    fn deterministic_for_seed() {
        let x: Vec<Vec<f64>> = (0..60).map(|i| vec![(i % 7) as f64, (i * 13 % 11) as f64]).collect();
        let y: Vec<u8> = (0..60).map(|i| u8::from(i % 3 == 0)).collect();
        let p = RfParams {
            trees: 10,
            ..RfParams::default()
        };
        let a = RandomForest::fit(&p, &x, &y, 5);
        let b = RandomForest::fit(&p, &x, &y, 5);
        assert_eq!(a, b);
        let c = RandomForest::fit(&p, &x, &y, 6);
        assert_ne!(a, c);
    }
}
