use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Masks each cell independently with the given probability (missing
/// completely at random), returning the masked matrix and the mask. A draw
/// that would leave a column with no observed values is rejected and
/// redrawn, since nothing downstream could impute such a column.
pub fn mask_mcar(
    rows: &[Vec<f64>],
    rate: f64,
    seed: u64,
) -> Result<(Vec<Vec<Option<f64>>>, Vec<Vec<bool>>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!("mask rate {rate} outside [0,1)")));
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("masking an empty matrix".into()));
    }
    let p = rows[0].len();
    for (r, row) in rows.iter().enumerate() {
        if row.len() != p {
            return Err(Error::ShapeMismatch(format!(
                "row {r} has {} columns, expected {p}",
                row.len()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    const MAX_ATTEMPTS: usize = 100;
    for _ in 0..MAX_ATTEMPTS {
        let mask: Vec<Vec<bool>> = rows
            .iter()
            .map(|row| row.iter().map(|_| rng.random_range(0.0..1.0) < rate).collect())
            .collect();
        let column_wiped = (0..p).any(|j| mask.iter().all(|m| m[j]));
        if column_wiped {
            continue;
        }
        let masked = rows
            .iter()
            .zip(&mask)
            .map(|(row, m)| {
                row.iter()
                    .zip(m)
                    .map(|(v, &hide)| if hide { None } else { Some(*v) })
                    .collect()
            })
            .collect();
        return Ok((masked, mask));
    }
    Err(Error::InvalidArgument(format!(
        "mask rate {rate} keeps wiping out whole columns"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(n: usize, p: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|r| (0..p).map(|c| (r * p + c) as f64).collect())
            .collect()
    }

    #[test]
    fn zero_rate_changes_nothing() {
        let m = matrix(10, 3);
        let (masked, mask) = mask_mcar(&m, 0.0, 1).unwrap();
        assert!(mask.iter().flatten().all(|&b| !b));
        for (row, orig) in masked.iter().zip(&m) {
            let vals: Vec<f64> = row.iter().map(|v| v.unwrap()).collect();
            assert_eq!(&vals, orig);
        }
    }

    #[test]
    fn masked_fraction_is_near_the_rate() {
        let m = matrix(1000, 10);
        let (_, mask) = mask_mcar(&m, 0.2, 3).unwrap();
        let frac = mask.iter().flatten().filter(|&&b| b).count() as f64 / 10000.0;
        assert!((frac - 0.2).abs() < 0.012, "masked fraction {frac}");
    }

    #[test]
    fn deterministic_given_seed() {
        let m = matrix(50, 4);
        let a = mask_mcar(&m, 0.3, 9).unwrap();
        let b = mask_mcar(&m, 0.3, 9).unwrap();
        assert_eq!(a, b);
        let c = mask_mcar(&m, 0.3, 10).unwrap();
        assert_ne!(a.1, c.1);
    }

    #[test]
    fn no_column_is_fully_masked() {
        // Tiny matrix and a high rate: single draws often wipe a column, the
        // resample guard must avoid it.
        let m = matrix(3, 2);
        for seed in 0..20 {
            let (_, mask) = mask_mcar(&m, 0.6, seed).unwrap();
            for j in 0..2 {
                assert!(mask.iter().any(|row| !row[j]));
            }
        }
    }

    #[test]
    fn rejects_bad_rate() {
        let m = matrix(3, 2);
        assert!(mask_mcar(&m, 1.0, 1).is_err());
        assert!(mask_mcar(&m, -0.1, 1).is_err());
    }
}
