use crate::error::Result;
use crate::eval::stats::{mean, quantile_sorted, sample_sd};
use crate::tabular::cohort::{Cohort, FeatureKind, FeatureSpec};

/// Result of cleaning one column: flagged cells became missing.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanOutcome {
    pub values: Vec<Option<f64>>,
    pub flagged: usize,
    /// Set when the column had no observed values and was left unchanged.
    pub all_missing: bool,
}

/// Flags implausible values as missing.
///
/// With physiologic limits on the spec, any out-of-limit value is flagged.
/// Without limits, a value is flagged only when it violates BOTH rules on
/// the column's own distribution: beyond mean +/- 3 sd, and outside
/// [Q1 - 3*IQR, Q3 + 3*IQR]. Statistics come from the pre-cleaning column.
pub fn clean_outliers(column: &[Option<f64>], spec: &FeatureSpec) -> Result<CleanOutcome> {
    let observed: Vec<f64> = column.iter().flatten().copied().collect();
    if observed.is_empty() {
        return Ok(CleanOutcome { values: column.to_vec(), flagged: 0, all_missing: true });
    }

    let flag: Box<dyn Fn(f64) -> bool> = if let Some((lo, hi)) = spec.limits {
        Box::new(move |v| v < lo || v > hi)
    } else {
        if observed.len() < 2 {
            // One observed value defines no spread; nothing can be flagged.
            return Ok(CleanOutcome { values: column.to_vec(), flagged: 0, all_missing: false });
        }
        let m = mean(&observed)?;
        let sd = sample_sd(&observed)?;
        let mut sorted = observed.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite value in clean_outliers"));
        let q1 = quantile_sorted(&sorted, 0.25)?;
        let q3 = quantile_sorted(&sorted, 0.75)?;
        let iqr = q3 - q1;
        Box::new(move |v| {
            let beyond_sd = (v - m).abs() > 3.0 * sd;
            let beyond_iqr = v < q1 - 3.0 * iqr || v > q3 + 3.0 * iqr;
            beyond_sd && beyond_iqr
        })
    };

    let mut flagged = 0;
    let values = column
        .iter()
        .map(|cell| match cell {
            Some(v) if flag(*v) => {
                flagged += 1;
                None
            }
            other => *other,
        })
        .collect();
    Ok(CleanOutcome { values, flagged, all_missing: false })
}

/// Cleans every non-binary column of a cohort in place, returning the number
/// of cells flagged per feature.
pub fn clean_cohort(cohort: &mut Cohort) -> Result<Vec<usize>> {
    let mut flagged = Vec::with_capacity(cohort.n_features());
    for f in 0..cohort.n_features() {
        if cohort.specs[f].kind == FeatureKind::Binary {
            flagged.push(0);
            continue;
        }
        let outcome = clean_outliers(&cohort.column(f), &cohort.specs[f])?;
        cohort.set_column(f, &outcome.values)?;
        flagged.push(outcome.flagged);
    }
    Ok(flagged)
}
