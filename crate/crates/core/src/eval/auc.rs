use super::{EvalError, Result};

/// Area under the ROC curve via the rank-sum identity: the probability that
/// a random churner scores above a random non-churner, ties counted half.
pub fn roc_auc(labels: &[u8], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(EvalError::LengthMismatch(labels.len(), scores.len()));
    }
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // doubled ranks: tie averages stay integral
    let mut pos_rank_sum2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg2 = (i + 1 + j + 1) as u128;
        for &k in &order[i..=j] {
            if labels[k] == 1 {
                pos_rank_sum2 += avg2;
            }
        }
        i = j + 1;
    }
    let (p, q) = (n_pos as u128, n_neg as u128);
    // 2 * (R_pos - p(p+1)/2) counts concordant pairs twice and ties once
    let num2 = pos_rank_sum2 - p * (p + 1);
    Ok(num2 as f64 / (2 * p * q) as f64)
}
