use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Row indices of a train/validation/test partition, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

const TEST_FRACTION: f64 = 0.2;
const VALIDATION_FRACTION_PER_CLASS: f64 = 0.04;

/// Splits by label: the test set takes 20% stratified so prevalence is
/// preserved, the validation set takes 8% of the total drawn 50/50 from each
/// class, and training keeps the rest. Deterministic given the seed.
pub fn split_cohort(labels: &[u8], seed: u64) -> Result<SplitIndices> {
    if labels.is_empty() {
        return Err(Error::EmptyInput("split over empty cohort".into()));
    }
    let mut pos: Vec<usize> = Vec::new();
    let mut neg: Vec<usize> = Vec::new();
    for (i, &y) in labels.iter().enumerate() {
        if y == 1 {
            pos.push(i);
        } else {
            neg.push(i);
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass("split needs both classes present".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);

    let n = labels.len() as f64;
    let test_pos = (TEST_FRACTION * pos.len() as f64).round() as usize;
    let test_neg = (TEST_FRACTION * neg.len() as f64).round() as usize;
    let val_per_class = (VALIDATION_FRACTION_PER_CLASS * n).round() as usize;

    if pos.len() < test_pos + val_per_class || neg.len() < test_neg + val_per_class {
        return Err(Error::InvalidArgument(format!(
            "not enough rows per class for a balanced validation set: \
             {} positives / {} negatives, need {} for validation after the test split",
            pos.len(),
            neg.len(),
            val_per_class
        )));
    }

    let mut test: Vec<usize> = pos[..test_pos].to_vec();
    test.extend_from_slice(&neg[..test_neg]);
    let mut validation: Vec<usize> = pos[test_pos..test_pos + val_per_class].to_vec();
    validation.extend_from_slice(&neg[test_neg..test_neg + val_per_class]);
    let mut train: Vec<usize> = pos[test_pos + val_per_class..].to_vec();
    train.extend_from_slice(&neg[test_neg + val_per_class..]);

    test.sort_unstable();
    validation.sort_unstable();
    train.sort_unstable();
    if train.is_empty() {
        return Err(Error::EmptyInput("split left no training rows".into()));
    }
    Ok(SplitIndices { train, validation, test })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels_with_prevalence(n: usize, n_pos: usize) -> Vec<u8> {
        // Interleave positives through the index range so stratification is
        // actually exercised.
        let mut labels = vec![0u8; n];
        for k in 0..n_pos {
            labels[k * n / n_pos] = 1;
        }
        labels
    }

    #[test]
    fn sixteen_percent_prevalence_example() {
        let labels = labels_with_prevalence(1000, 160);
        let s = split_cohort(&labels, 7).unwrap();
        assert_eq!(s.test.len(), 200);
        assert_eq!(s.test.iter().filter(|&&i| labels[i] == 1).count(), 32);
        assert_eq!(s.validation.len(), 80);
        assert_eq!(s.validation.iter().filter(|&&i| labels[i] == 1).count(), 40);
        assert_eq!(s.train.len(), 720);
    }

    #[test]
    fn partition_is_disjoint_and_exhaustive() {
        let labels = labels_with_prevalence(500, 100);
        let s = split_cohort(&labels, 3).unwrap();
        let mut all: Vec<usize> = s
            .train
            .iter()
            .chain(&s.validation)
            .chain(&s.test)
            .copied()
            .collect();
        all.sort_unstable();
        let expect: Vec<usize> = (0..500).collect();
        assert_eq!(all, expect);
    }

    #[test]
    fn same_seed_reproduces_the_partition() {
        let labels = labels_with_prevalence(300, 60);
        let a = split_cohort(&labels, 11).unwrap();
        let b = split_cohort(&labels, 11).unwrap();
        assert_eq!(a, b);
        let c = split_cohort(&labels, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_insufficient_minority_class() {
        // 5 positives of 100: validation wants 4 per class but the test split
        // already takes 1 positive, leaving 4- = too few for 4 + train.
        let labels = labels_with_prevalence(100, 5);
        // round(0.04*100) = 4 per class; positives: test 1, validation 4 -> 0 left. OK but tight.
        let s = split_cohort(&labels, 1).unwrap();
        assert_eq!(s.validation.iter().filter(|&&i| labels[i] == 1).count(), 4);
        // With 4 positives it must fail: test takes 1, validation needs 4, only 3 left.
        let labels = labels_with_prevalence(100, 4);
        assert!(split_cohort(&labels, 1).is_err());
    }

    #[test]
    fn rejects_single_class() {
        assert!(split_cohort(&[0, 0, 0, 0], 1).is_err());
        assert!(split_cohort(&[], 1).is_err());
    }
}
