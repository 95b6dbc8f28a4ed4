use serde::{Deserialize, Serialize};

use super::sigmoid;

pub const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NbParams {
    pub variance_floor: f64,
}

impl Default for NbParams {
    fn default() -> Self {
        Self {
            variance_floor: VARIANCE_FLOOR,
        }
    }
}

/// Gaussian naive Bayes. Index 0 is non-churn, index 1 is churn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub priors: [f64; 2],
    /// Per class, per feature `(mean, variance)`.
    pub stats: [Vec<(f64, f64)>; 2],
}

impl GaussianNb {
    pub(crate) fn fit(p: &NbParams, x: &[Vec<f64>], y: &[u8]) -> Self {
        let d = x[0].len();
        let stats_for = |class: u8| -> (f64, Vec<(f64, f64)>) {
            let rows: Vec<&Vec<f64>> = x.iter().zip(y).filter(|(_, &l)| l == class).map(|(r, _)| r).collect();
            let n = rows.len() as f64;
            let stats = (0..d)
                .map(|j| {
                    let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
                    let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
                    (mean, var.max(p.variance_floor))
                })
                .collect();
            (n, stats)
        };
        let (n0, s0) = stats_for(0);
        let (n1, s1) = stats_for(1);
        let total = n0 + n1;
        Self {
            priors: [n0 / total, n1 / total],
            stats: [s0, s1],
        }
    }

    pub fn width(&self) -> usize {
        self.stats[0].len()
    }

    pub(crate) fn score(&self, row: &[f64]) -> f64 {
        gaussian_nb_posterior(self.priors, [&self.stats[0], &self.stats[1]], row)
    }
}

fn log_joint(prior: f64, stats: &[(f64, f64)], row: &[f64]) -> f64 {
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    prior.ln()
        + stats
            .iter()
            .zip(row)
            .map(|(&(m, v), &x)| -0.5 * (ln_2pi + v.ln()) - (x - m).powi(2) / (2.0 * v))
            .sum::<f64>()
}

/// Churn posterior from class priors `[non-churn, churn]` and per-class
/// Gaussian `(mean, variance)` lists, normalized in log space.
pub fn gaussian_nb_posterior(priors: [f64; 2], stats: [&[(f64, f64)]; 2], row: &[f64]) -> f64 {
    let l0 = log_joint(priors[0], stats[0], row);
    let l1 = log_joint(priors[1], stats[1], row);
    sigmoid(l1 - l0)
}
