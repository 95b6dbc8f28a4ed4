use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::{EvalError, Result};

/// Largest number of non-zero differences handled by exact enumeration.
pub const EXACT_MAX_N: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WilcoxonMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// min(W+, W-).
    pub statistic: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Non-zero differences used.
    pub n: usize,
    /// Normal-approximation z score; reported for every n.
    pub z: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub method: WilcoxonMethod,
    pub reject: bool,
}

/// Doubled average ranks of `|d|`, so tied ranks stay integral.
fn doubled_ranks(abs: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..abs.len()).collect();
    order.sort_by(|&a, &b| abs[a].total_cmp(&abs[b]));
    let mut ranks = vec![0u64; abs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && abs[order[j + 1]] == abs[order[i]] {
            j += 1;
        }
        for &k in &order[i..=j] {
            ranks[k] = (i + j + 2) as u64;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided Wilcoxon signed-rank test on paired samples `(a, b)`.
/// Zero differences are discarded before ranking.
pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)], alpha: f64) -> Result<WilcoxonResult> {
    if pairs.is_empty() {
        return Err(EvalError::Empty);
    }
    let diffs: Vec<f64> = pairs
        .iter()
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.is_empty() {
        return Err(EvalError::AllZeroDifferences);
    }
    let n = diffs.len();
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks2 = doubled_ranks(&abs);
    let plus2: u64 = diffs
        .iter()
        .zip(&ranks2)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total2: u64 = ranks2.iter().sum();
    let minus2 = total2 - plus2;
    let stat2 = plus2.min(minus2);

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let sd = (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0).sqrt();
    let statistic = stat2 as f64 / 2.0;
    let z = (statistic - mean) / sd;

    let (p_value, method) = if n <= EXACT_MAX_N {
        // counts[s] = number of sign assignments whose positive doubled-rank sum is s
        let mut counts = vec![0u64; total2 as usize + 1];
        counts[0] = 1;
        for &r in &ranks2 {
            for s in (r as usize..counts.len()).rev() {
                counts[s] += counts[s - r as usize];
            }
        }
        let tail: u64 = counts[..=stat2 as usize].iter().sum();
        let p = 2.0 * tail as f64 / (1u64 << n) as f64;
        (p.min(1.0), WilcoxonMethod::Exact)
    } else {
        // two-sided: 2 * Phi(-|z|) = erfc(|z| / sqrt 2)
        let p = erfc(z.abs() / std::f64::consts::SQRT_2);
        (p.min(1.0), WilcoxonMethod::Normal)
    };

    Ok(WilcoxonResult {
        statistic,
        w_plus: plus2 as f64 / 2.0,
        w_minus: minus2 as f64 / 2.0,
        n,
        z,
        p_value,
        method,
        reject: p_value < alpha,
    })
}
