use serde::{Deserialize, Serialize};

use super::{Result, TabularError};

/// Fisher–Pearson moment coefficient of skewness, `m3 / m2^(3/2)`, using
/// population (biased) central moments.
pub fn column_skewness(values: &[f64]) -> Result<f64> {
    if values.len() < 3 {
        return Err(TabularError::UndefinedSkew("fewer than 3 values"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (m2, m3) = values.iter().fold((0.0, 0.0), |(m2, m3), &v| {
        let d = v - mean;
        (m2 + d * d, m3 + d * d * d)
    });
    let (m2, m3) = (m2 / n, m3 / n);
    if m2.sqrt() <= 8.0 * f64::EPSILON * mean.abs() {
        return Err(TabularError::UndefinedSkew("zero variance"));
    }
    Ok(m3 / m2.powf(1.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub n_unique: usize,
}

impl ColumnStats {
    /// `None` for an empty column.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut n_unique = 1;
        for w in sorted.windows(2) {
            if w[0] != w[1] {
                n_unique += 1;
            }
        }
        Some(Self {
            min: sorted[0],
            max: sorted[sorted.len() - 1],
            mean: values.iter().sum::<f64>() / values.len() as f64,
            n_unique,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_data_has_zero_skew() {
        assert_eq!(column_skewness(&[1.0, 2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn single_outlier() {
        // m2 = 0.1875, m3 = 0.09375
        let expected = 0.09375 / 0.1875f64.powf(1.5);
        let s = column_skewness(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((s - expected).abs() < 1e-12);
        assert!((s - 1.1547).abs() < 1e-4);
    }

    #[test]
    fn zero_variance_is_undefined() {
        assert!(matches!(
            column_skewness(&[1.0, 1.0, 1.0]),
            Err(TabularError::UndefinedSkew(_))
        ));
        assert!(column_skewness(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn stats_count_unique() {
        let s = ColumnStats::of(&[3.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((s.min, s.max, s.n_unique), (1.0, 3.0, 3));
        assert_eq!(s.mean, 2.25);
        assert!(ColumnStats::of(&[]).is_none());
    }
}
