use rand::seq::SliceRandom;

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::{SeedStreams, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: Dataset,
    pub valid: Dataset,
    pub test: Dataset,
}

/// Seeded shuffle followed by a contiguous partition into
/// train/validation/test. Sizes are `round(f·n)` for the first two parts;
/// the test split takes the remainder.
pub fn split(dataset: &Dataset, fractions: [f64; 3], seed: u64) -> Result<Splits> {
    if fractions.iter().any(|f| !(*f > 0.0)) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "split fractions must be positive and sum to 1, got {fractions:?}"
        )));
    }
    let n = dataset.len();
    let n_train = (fractions[0] * n as f64).round() as usize;
    let n_valid = (fractions[1] * n as f64).round() as usize;
    if n_train == 0 || n_valid == 0 || n_train + n_valid >= n {
        return Err(Error::invalid(format!(
            "fractions {fractions:?} leave an empty split for n = {n}"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut SeedStreams::new(seed).rng(Stream::Split));
    let part = |range: &[usize], tag: &str| Dataset {
        records: range.iter().map(|&i| dataset.records[i].clone()).collect(),
        feature_names: dataset.feature_names.clone(),
        provenance: format!("{}#{tag}", dataset.provenance),
    };
    Ok(Splits {
        train: part(&order[..n_train], "train"),
        valid: part(&order[n_train..n_train + n_valid], "valid"),
        test: part(&order[n_train + n_valid..], "test"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SurvivalRecord;

    fn dataset(n: usize) -> Dataset {
        let records = (0..n)
            .map(|i| SurvivalRecord {
                features: vec![i as f64],
                time: 1.0 + i as f64,
                event: i % 2 == 0,
            })
            .collect();
        Dataset::with_default_names(records, "seq").unwrap()
    }

    #[test]
    fn eight_one_one() {
        let s = split(&dataset(10), [0.8, 0.1, 0.1], 3).unwrap();
        assert_eq!((s.train.len(), s.valid.len(), s.test.len()), (8, 1, 1));
    }

    #[test]
    fn deterministic_partition() {
        let d = dataset(97);
        let a = split(&d, [0.6, 0.2, 0.2], 42).unwrap();
        let b = split(&d, [0.6, 0.2, 0.2], 42).unwrap();
        assert_eq!(a, b);
        let mut all: Vec<f64> = [&a.train, &a.valid, &a.test]
            .iter()
            .flat_map(|p| p.records.iter().map(|r| r.features[0]))
            .collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..97).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn empty_split_is_an_error() {
        assert!(split(&dataset(3), [0.8, 0.1, 0.1], 0).is_err());
        assert!(split(&dataset(10), [0.5, 0.5, 0.1], 0).is_err());
    }
}
