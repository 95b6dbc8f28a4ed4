use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, Result, TabularError};

/// Per-class train counts by largest-remainder apportionment: the total is
/// `round(n * fraction)` and each class receives `floor(size * fraction)`
/// plus at most one extra row. Remainder ties go to the lower label.
fn train_quota(neg: usize, pos: usize, fraction: f64) -> [usize; 2] {
    let n = neg + pos;
    let total = (n as f64 * fraction).round() as usize;
    let exact = [neg as f64 * fraction, pos as f64 * fraction];
    let mut quota = [exact[0].floor() as usize, exact[1].floor() as usize];
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    let sizes = [neg, pos];
    let mut missing = total.saturating_sub(quota[0] + quota[1]);
    for &c in order.iter().cycle().take(4) {
        if missing == 0 {
            break;
        }
        if quota[c] < sizes[c] {
            quota[c] += 1;
            missing -= 1;
        }
    }
    quota
}

/// Stratified, seeded train/test partition. Row order inside each part
/// follows the original order.
pub fn split_train_test(d: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(d, train_fraction, seed)?;
    Ok((d.subset(&train), d.subset(&test)))
}

/// Row indices of the partition made by [`split_train_test`]. It depends
/// only on the labels, the fraction and the seed.
pub fn split_indices(d: &Dataset, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(TabularError::InvalidFraction(train_fraction));
    }
    let labels = d.labels();
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &y) in labels.iter().enumerate() {
        by_class[y as usize].push(i);
    }
    for (label, idx) in by_class.iter().enumerate() {
        if idx.len() < 2 {
            return Err(TabularError::ClassTooSmall {
                label: label as u8,
                count: idx.len(),
            });
        }
    }
    let quota = train_quota(by_class[0].len(), by_class[1].len(), train_fraction);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; d.n_rows()];
    for (class, idx) in by_class.iter_mut().enumerate() {
        idx.shuffle(&mut rng);
        for &i in &idx[..quota[class]] {
            in_train[i] = true;
        }
    }
    Ok((0..d.n_rows()).partition(|&i| in_train[i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{Column, Provenance, Schema};

    fn toy(pos: usize, neg: usize) -> Dataset {
        let schema = Schema::new(vec![Column::numeric("x"), Column::label("y")]).unwrap();
        let rows = (0..pos + neg)
            .map(|i| vec![i as f64, if i < pos { 1.0 } else { 0.0 }])
            .collect();
        Dataset::new(schema, rows, Provenance::Real).unwrap()
    }

    #[test]
    fn ten_rows_seventy_percent() {
        // 5 * 0.7 = 3.5 for both classes; one class takes the extra row
        // for a total of round(10 * 0.7) = 7. Equal remainders favour label 0.
        let (train, test) = split_train_test(&toy(5, 5), 0.7, 1).unwrap();
        assert_eq!(train.n_rows(), 7);
        assert_eq!(test.n_rows(), 3);
        assert_eq!(train.class_counts(), (3, 4));
    }

    #[test]
    fn half_split_is_symmetric() {
        let (train, test) = split_train_test(&toy(2, 2), 0.5, 9).unwrap();
        assert_eq!(train.class_counts(), (1, 1));
        assert_eq!(test.class_counts(), (1, 1));
    }

    #[test]
    fn deterministic_for_seed() {
        let d = toy(40, 60);
        let a = split_train_test(&d, 0.7, 42).unwrap();
        let b = split_train_test(&d, 0.7, 42).unwrap();
        assert_eq!(a, b);
        let c = split_train_test(&d, 0.7, 43).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            split_train_test(&toy(1, 5), 0.7, 0),
            Err(TabularError::ClassTooSmall { label: 1, count: 1 })
        ));
        assert!(split_train_test(&toy(5, 5), 1.0, 0).is_err());
        assert!(split_train_test(&toy(5, 5), 0.0, 0).is_err());
    }
}
