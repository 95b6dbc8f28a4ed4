use serde::{Deserialize, Serialize};

use super::{sigmoid, Standardizer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LrParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 200,
            l2: 1e-4,
        }
    }
}

/// L2-regularized logistic regression trained by full-batch gradient
/// descent on standardized inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub weights: Vec<f64>,
    pub bias: f64,
    scaler: Standardizer,
}

/// Mean log-loss plus `l2/2 * |w|^2` and its gradient `(dw, db)`. The bias
/// is not regularized.
pub(crate) fn loss_and_gradient(w: &[f64], b: f64, x: &[Vec<f64>], y: &[u8], l2: f64) -> (f64, Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut gw = vec![0.0; w.len()];
    let mut gb = 0.0;
    let mut loss = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let z = b + row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
        let t = f64::from(label);
        // log(1 + e^z) - t z in overflow-safe form
        loss += z.max(0.0) + (-z.abs()).exp().ln_1p() - t * z;
        let r = sigmoid(z) - t;
        for (g, v) in gw.iter_mut().zip(row) {
            *g += r * v;
        }
        gb += r;
    }
    let reg: f64 = w.iter().map(|v| v * v).sum::<f64>() * l2 / 2.0;
    for (g, v) in gw.iter_mut().zip(w) {
        *g = *g / n + l2 * v;
    }
    (loss / n + reg, gw, gb / n)
}

impl LogisticRegression {
    pub(crate) fn fit(p: &LrParams, x: &[Vec<f64>], y: &[u8]) -> Self {
        let scaler = Standardizer::fit(x);
        let xs: Vec<Vec<f64>> = x.iter().map(|r| scaler.apply(r)).collect();
        let mut weights = vec![0.0; scaler.width()];
        let mut bias = 0.0;
        for _ in 0..p.epochs {
            let (_, gw, gb) = loss_and_gradient(&weights, bias, &xs, y, p.l2);
            for (w, g) in weights.iter_mut().zip(&gw) {
                *w -= p.learning_rate * g;
            }
            bias -= p.learning_rate * gb;
        }
        Self { weights, bias, scaler }
    }

    pub fn width(&self) -> usize {
        self.scaler.width()
    }

    pub(crate) fn score(&self, row: &[f64]) -> f64 {
        let xs = self.scaler.apply(row);
        sigmoid(self.bias + xs.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_epochs_scores_half() {
        let p = LrParams {
            epochs: 0,
            ..LrParams::default()
        };
        let m = LogisticRegression::fit(&p, &[vec![1.0, 2.0], vec![3.0, -1.0]], &[0, 1]);
        assert!(m.weights.iter().all(|&w| w == 0.0));
        assert_eq!(m.score(&[10.0, 10.0]), 0.5);
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn gradient_matches_finite_differences(
            rows in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 3), 2..12),
            labels in prop::collection::vec(0u8..2, 12),
            w in prop::collection::vec(-1.5f64..1.5, 3),
            b in -1.0f64..1.0,
            l2 in 0.0f64..0.5,
        ) {
            let y = &labels[..rows.len()];
            let (_, gw, gb) = loss_and_gradient(&w, b, &rows, y, l2);
            let h = 1e-6;
            for j in 0..w.len() {
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp[j] += h;
                wm[j] -= h;
                let fd = (loss_and_gradient(&wp, b, &rows, y, l2).0 - loss_and_gradient(&wm, b, &rows, y, l2).0) / (2.0 * h);
                prop_assert!(rel_err(fd, gw[j]) < 1e-5 || (fd - gw[j]).abs() < 1e-9, "dw{} {} vs {}", j, fd, gw[j]);
            }
            let fd = (loss_and_gradient(&w, b + h, &rows, y, l2).0 - loss_and_gradient(&w, b - h, &rows, y, l2).0) / (2.0 * h);
            prop_assert!(rel_err(fd, gb) < 1e-5 || (fd - gb).abs() < 1e-9);
        }
    }
}
