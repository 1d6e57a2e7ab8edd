use crate::error::Result;
use crate::tabular::cohort::{time_seconds, Cohort, FeatureKind};

/// Fills interior gaps of one time series linearly in time. Leading and
/// trailing missing values stay missing; `times` must be ascending.
pub fn interpolate_series(times: &[f64], values: &[Option<f64>]) -> Vec<Option<f64>> {
    debug_assert_eq!(times.len(), values.len());
    let mut out = values.to_vec();
    let observed: Vec<usize> = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|_| i))
        .collect();
    for pair in observed.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi == lo + 1 {
            continue;
        }
        let (t0, t1) = (times[lo], times[hi]);
        let (v0, v1) = (values[lo].unwrap(), values[hi].unwrap());
        for i in lo + 1..hi {
            let frac = if t1 > t0 { (times[i] - t0) / (t1 - t0) } else { 0.0 };
            out[i] = Some(v0 + frac * (v1 - v0));
        }
    }
    out
}

/// Interpolates every non-binary feature within each patient's studies,
/// ordered by study time. Returns the number of cells filled.
pub fn interpolate_cohort(cohort: &mut Cohort) -> Result<usize> {
    // Deterministic grouping: sort row indices by (patient, time, row).
    let mut order: Vec<usize> = (0..cohort.n_rows()).collect();
    order.sort_by(|&a, &b| {
        cohort.patient_ids[a]
            .cmp(&cohort.patient_ids[b])
            .then(cohort.study_times[a].cmp(&cohort.study_times[b]))
            .then(a.cmp(&b))
    });

    let mut filled = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len()
            && cohort.patient_ids[order[end]] == cohort.patient_ids[order[start]]
        {
            end += 1;
        }
        let rows = &order[start..end];
        if rows.len() > 1 {
            let times: Vec<f64> =
                rows.iter().map(|&r| time_seconds(cohort.study_times[r])).collect();
            for f in 0..cohort.n_features() {
                if cohort.specs[f].kind == FeatureKind::Binary {
                    continue;
                }
                let series: Vec<Option<f64>> = rows.iter().map(|&r| cohort.value(r, f)).collect();
                let fixed = interpolate_series(&times, &series);
                for (k, &r) in rows.iter().enumerate() {
                    if series[k].is_none() && fixed[k].is_some() {
                        filled += 1;
                        cohort.set_value(r, f, fixed[k]);
                    }
                }
            }
        }
        start = end;
    }
    Ok(filled)
}
