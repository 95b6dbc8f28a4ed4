use serde::{Deserialize, Serialize};

use super::Standardizer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 5 }
    }
}

/// k-nearest neighbours under Euclidean distance on standardized features.
/// The score is the churn fraction among the `k` nearest training rows;
/// distance ties go to the earlier training row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    k: usize,
    scaler: Standardizer,
    rows: Vec<Vec<f64>>,
    labels: Vec<u8>,
}

impl Knn {
    pub(crate) fn fit(p: &KnnParams, x: &[Vec<f64>], y: &[u8]) -> Self {
        let scaler = Standardizer::fit(x);
        Self {
            k: p.k.min(x.len()),
            rows: x.iter().map(|r| scaler.apply(r)).collect(),
            labels: y.to_vec(),
            scaler,
        }
    }

    pub fn width(&self) -> usize {
        self.scaler.width()
    }

    /// Indices of the `k` nearest training rows, nearest first.
    pub fn neighbours(&self, row: &[f64]) -> Vec<usize> {
        let q = self.scaler.apply(row);
        let mut d: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum::<f64>(), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k - 1, cmp);
            d.truncate(self.k);
        }
        d.sort_by(cmp);
        d.into_iter().map(|(_, i)| i).collect()
    }

    pub(crate) fn score(&self, row: &[f64]) -> f64 {
        let churn = self
            .neighbours(row)
            .into_iter()
            .filter(|&i| self.labels[i] == 1)
            .count();
        if 2 * churn == self.k {
            // split vote: score just under the 0.5 threshold, i.e. non-churn
            return 0.5f64.next_down();
        }
        churn as f64 / self.k as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_nn_returns_own_label() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![5.0, 5.0]];
        let y = vec![1, 0, 1];
        let m = Knn::fit(&KnnParams { k: 1 }, &x, &y);
        for (r, &l) in x.iter().zip(&y) {
            assert_eq!(m.score(r), f64::from(l));
        }
    }

    #[test]
    fn split_vote_goes_to_non_churn() {
        let m = Knn::fit(&KnnParams { k: 2 }, &[vec![0.0], vec![1.0], vec![9.0]], &[1, 0, 0]);
        let s = m.score(&[0.5]);
        assert!(s < 0.5 && s > 0.49);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn matches_exhaustive_scan(
            x in prop::collection::vec(prop::collection::vec(-3i32..3, 2), 2..60),
            labels in prop::collection::vec(0u8..2, 60),
            q in prop::collection::vec(-3.0f64..3.0, 2),
            k in 1usize..8,
        ) {
            let x: Vec<Vec<f64>> = x.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect();
            let y = &labels[..x.len()];
            let m = Knn::fit(&KnnParams { k }, &x, y);
            let qs = m.scaler.apply(&q);
            let mut all: Vec<(f64, usize)> = m.rows.iter().enumerate()
                .map(|(i, r)| ((r[0] - qs[0]).powi(2) + (r[1] - qs[1]).powi(2), i))
                .collect();
            all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let expected: Vec<usize> = all.into_iter().take(k.min(x.len())).map(|(_, i)| i).collect();
            prop_assert_eq!(m.neighbours(&q), expected);
        }
    }
}
