use serde::{Deserialize, Serialize};

use super::{EvalError, Result};

/// Per-dataset ranks (1 = best) and their column means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    pub ranks: Vec<Vec<f64>>,
    pub average: Vec<f64>,
}

/// Ranks the methods (columns) within each dataset (row), averaging tied
/// ranks, then averages across datasets.
pub fn average_rank(scores: &[Vec<f64>], higher_is_better: bool) -> Result<RankTable> {
    let width = scores.first().map(Vec::len).ok_or(EvalError::Ragged)?;
    if width == 0 || scores.iter().any(|r| r.len() != width) {
        return Err(EvalError::Ragged);
    }
    let ranks: Vec<Vec<f64>> = scores
        .iter()
        .map(|row| {
            let key = |v: f64| if higher_is_better { -v } else { v };
            let mut order: Vec<usize> = (0..width).collect();
            order.sort_by(|&a, &b| key(row[a]).total_cmp(&key(row[b])));
            let mut out = vec![0.0; width];
            let mut i = 0;
            while i < width {
                let mut j = i;
                while j + 1 < width && row[order[j + 1]] == row[order[i]] {
                    j += 1;
                }
                let avg = (i + j + 2) as f64 / 2.0;
                for &k in &order[i..=j] {
                    out[k] = avg;
                }
                i = j + 1;
            }
            out
        })
        .collect();
    let average = (0..width)
        .map(|c| ranks.iter().map(|r| r[c]).sum::<f64>() / ranks.len() as f64)
        .collect();
    Ok(RankTable { ranks, average })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ties_share_rank() {
        let t = average_rank(&[vec![0.9, 0.8, 0.8, 0.1]], true).unwrap();
        assert_eq!(t.ranks[0], vec![1.0, 2.5, 2.5, 4.0]);
    }

    #[test]
    fn averages_over_rows() {
        let t = average_rank(&[vec![0.9, 0.5], vec![0.4, 0.6]], true).unwrap();
        assert_eq!(t.average, vec![1.5, 1.5]);
        let t = average_rank(&[vec![0.9, 0.5]], false).unwrap();
        assert_eq!(t.average, vec![2.0, 1.0]);
    }

    #[test]
    fn ragged_rejected() {
        assert_eq!(average_rank(&[vec![1.0], vec![1.0, 2.0]], true), Err(EvalError::Ragged));
        assert_eq!(average_rank(&[], true), Err(EvalError::Ragged));
    }

    proptest! {
        #[test]
        fn positive_scaling_keeps_ranks(
            rows in prop::collection::vec(prop::collection::vec(0i32..8, 5), 1..6),
            c in 1u32..50,
        ) {
            let a: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|&v| f64::from(v) / 4.0).collect()).collect();
            let b: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|v| v * f64::from(c)).collect()).collect();
            let ta = average_rank(&a, true).unwrap();
            prop_assert_eq!(&ta, &average_rank(&b, true).unwrap());
            for r in &ta.ranks {
                prop_assert_eq!(r.iter().sum::<f64>(), 15.0);
            }
        }
    }
}
