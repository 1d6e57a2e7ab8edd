use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tabular::cohort::Cohort;
use crate::tabular::linalg::irls_logistic;

/// Ordinal codes for diastolic function: normal maps below the dysfunction
/// range so the encoding orders severity.
pub const DIASTOLIC_CLASSES: [f64; 5] = [-1.0, 0.0, 1.0, 2.0, 3.0];

/// Maps a diastolic function label to its ordinal code; empty or "missing"
/// stays missing.
pub fn encode_diastolic(label: &str) -> Result<Option<f64>> {
    let norm = label.trim().to_ascii_lowercase();
    match norm.as_str() {
        "" | "missing" => Ok(None),
        "normal" => Ok(Some(-1.0)),
        "dysfunction-ungraded" => Ok(Some(0.0)),
        "grade i" => Ok(Some(1.0)),
        "grade ii" => Ok(Some(2.0)),
        "grade iii" => Ok(Some(3.0)),
        _ => Err(Error::InvalidArgument(format!(
            "unrecognized diastolic label {label:?}"
        ))),
    }
}

/// Fills missing entries of the ordinal diastolic column with the argmax of
/// one-vs-all logistic classifiers trained on rows where the column is
/// observed. Predictors are all other fully-observed columns. Observed
/// entries are untouched.
pub fn impute_diastolic(cohort: &mut Cohort, feature: &str) -> Result<usize> {
    let target = cohort.feature_index(feature)?;
    let n = cohort.n_rows();

    let predictors: Vec<usize> = (0..cohort.n_features())
        .filter(|&f| f != target && (0..n).all(|r| cohort.value(r, f).is_some()))
        .collect();

    let mut train_rows = Vec::new();
    let mut missing_rows = Vec::new();
    for r in 0..n {
        match cohort.value(r, target) {
            Some(v) => {
                if !DIASTOLIC_CLASSES.contains(&v) {
                    return Err(Error::InvalidArgument(format!(
                        "{feature} value {v} is not an ordinal diastolic code"
                    )));
                }
                train_rows.push(r);
            }
            None => missing_rows.push(r),
        }
    }
    if missing_rows.is_empty() {
        return Ok(0);
    }

    let classes: Vec<f64> = DIASTOLIC_CLASSES
        .iter()
        .copied()
        .filter(|c| train_rows.iter().any(|&r| cohort.value(r, target) == Some(*c)))
        .collect();
    if classes.len() < 2 {
        return Err(Error::SingleClass(format!(
            "diastolic imputation needs at least 2 observed classes, found {}",
            classes.len()
        )));
    }

    let design = |rows: &[usize]| {
        DMatrix::from_fn(rows.len(), predictors.len() + 1, |ri, ci| {
            if ci == 0 {
                1.0
            } else {
                cohort.value(rows[ri], predictors[ci - 1]).expect("predictor column complete")
            }
        })
    };
    let x_train = design(&train_rows);
    let x_missing = design(&missing_rows);

    // One-vs-all: per class, a logistic fit of "is this class" vs the rest.
    let mut betas = Vec::with_capacity(classes.len());
    for &class in &classes {
        let y = DVector::from_fn(train_rows.len(), |ri, _| {
            if cohort.value(train_rows[ri], target) == Some(class) {
                1.0
            } else {
                0.0
            }
        });
        betas.push(irls_logistic(&x_train, &y)?);
    }

    for (mi, &row) in missing_rows.iter().enumerate() {
        let mut best_class = classes[0];
        let mut best_score = f64::NEG_INFINITY;
        for (ci, beta) in betas.iter().enumerate() {
            let mut score = 0.0;
            for a in 0..x_missing.ncols() {
                score += x_missing[(mi, a)] * beta[a];
            }
            if score > best_score {
                best_score = score;
                best_class = classes[ci];
            }
        }
        cohort.set_value(row, target, Some(best_class));
    }
    Ok(missing_rows.len())
}
