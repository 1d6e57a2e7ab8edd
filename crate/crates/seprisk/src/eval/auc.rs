use crate::error::{Error, Result};
use crate::eval::stats::average_ranks;

/// Area under the ROC curve via the Mann-Whitney rank estimator: the
/// probability a random positive outscores a random negative, with ties
/// counted as 1/2.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.is_empty() {
        return Err(Error::EmptyInput("auc over empty scores".into()));
    }
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass("auc needs both classes present".into()));
    }
    let ranks = average_ranks(scores);
    let rank_sum_pos: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &y)| y == 1)
        .map(|(r, _)| r)
        .sum();
    let u = rank_sum_pos - n_pos as f64 * (n_pos as f64 + 1.0) / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Exhaustive pair-counting AUC, the oracle the rank estimator must match.
pub fn auc_brute_force(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let pos: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &y)| y == 1)
        .map(|(s, _)| *s)
        .collect();
    let neg: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &y)| y == 0)
        .map(|(s, _)| *s)
        .collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass("auc needs both classes present".into()));
    }
    let mut wins = 0.0;
    for &p in &pos {
        for &n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (pos.len() as f64 * neg.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn perfect_separation_scores_one() {
        let a = auc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap();
        assert_eq!(a, 1.0);
        let a = auc(&[0.9, 0.8, 0.2, 0.1], &[0, 0, 1, 1]).unwrap();
        assert_eq!(a, 0.0);
    }

    #[test]
    fn matches_hand_counted_pairs() {
        // Pairs (pos, neg): (0.35,0.1)+, (0.35,0.4)-, (0.8,0.1)+, (0.8,0.4)+.
        let a = auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap();
        assert_relative_eq!(a, 0.75, epsilon = 1e-15);
    }

    #[test]
    fn all_ties_score_half() {
        let a = auc(&[0.5; 6], &[0, 1, 0, 1, 0, 1]).unwrap();
        assert_relative_eq!(a, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn rejects_single_class() {
        assert!(auc(&[0.1, 0.2], &[1, 1]).is_err());
        assert!(auc(&[], &[]).is_err());
    }

    proptest! {
        // Discretized scores force plenty of ties; the rank estimator must
        // agree with exhaustive pair counting exactly.
        #[test]
        fn rank_estimator_equals_pair_counting(
            raw in proptest::collection::vec((0u32..12, 0u8..2), 2..200)
        ) {
            let scores: Vec<f64> = raw.iter().map(|(s, _)| *s as f64 / 4.0).collect();
            let labels: Vec<u8> = raw.iter().map(|(_, y)| *y).collect();
            let n_pos = labels.iter().filter(|&&y| y == 1).count();
            prop_assume!(n_pos > 0 && n_pos < labels.len());
            let fast = auc(&scores, &labels).unwrap();
            let slow = auc_brute_force(&scores, &labels).unwrap();
            prop_assert!((fast - slow).abs() < 1e-12, "rank {fast} vs pairs {slow}");
        }

        #[test]
        fn invariant_under_increasing_transforms(
            raw in proptest::collection::vec((-50i32..50, 0u8..2), 2..80)
        ) {
            let scores: Vec<f64> = raw.iter().map(|(s, _)| *s as f64 / 10.0).collect();
            let labels: Vec<u8> = raw.iter().map(|(_, y)| *y).collect();
            let n_pos = labels.iter().filter(|&&y| y == 1).count();
            prop_assume!(n_pos > 0 && n_pos < labels.len());
            let transformed: Vec<f64> = scores.iter().map(|s| (s * 0.7).exp()).collect();
            let a = auc(&scores, &labels).unwrap();
            let b = auc(&transformed, &labels).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
