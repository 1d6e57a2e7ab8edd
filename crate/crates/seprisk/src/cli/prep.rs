use std::path::{Path, PathBuf};

use crate::cli::config::RunConfig;
use crate::error::Result;
use crate::tabular::clean::clean_cohort;
use crate::tabular::cohort::{Cohort, FeatureKind};
use crate::tabular::diastolic::impute_diastolic;
use crate::tabular::interpolate::interpolate_cohort;
use crate::tabular::mice::mice_impute;

/// Cell counts per pipeline stage. `flagged` cells become missing and are
/// later refilled, so `missing_after` is zero whenever imputation succeeds
/// and the stage counts account for every changed cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PrepReport {
    pub rows: usize,
    pub features: usize,
    pub missing_before: usize,
    /// Implausible values nulled by outlier cleaning.
    pub flagged: usize,
    /// Cells filled from the same patient's other studies.
    pub interpolated: usize,
    /// Cells filled by chained-equation regression.
    pub mice_filled: usize,
    /// Ordinal cells filled by per-class logistic classifiers.
    pub ordinal_filled: usize,
    pub missing_after: usize,
    pub output: PathBuf,
}

impl PrepReport {
    /// Total cell edits summed over stages. A flagged cell counts twice: once
    /// when nulled, once when refilled downstream.
    pub fn cells_changed(&self) -> usize {
        self.flagged + self.interpolated + self.mice_filled + self.ordinal_filled
    }

    pub fn render_text(&self) -> String {
        format!(
            "prepared {} rows x {} features -> {}\n\
             missing cells        {:>7}\n\
             outliers flagged     {:>7}\n\
             interpolated         {:>7}\n\
             chained imputation   {:>7}\n\
             ordinal imputation   {:>7}\n\
             missing after        {:>7}\n",
            self.rows,
            self.features,
            self.output.display(),
            self.missing_before,
            self.flagged,
            self.interpolated,
            self.mice_filled,
            self.ordinal_filled,
            self.missing_after,
        )
    }
}

/// Cleans a cohort CSV and fills every hole: outlier flagging, per-patient
/// interpolation, chained-equation imputation for continuous and binary
/// columns, then classifier imputation for ordinal columns (which needs the
/// other columns complete, hence the order).
pub fn cmd_prep(input: &Path, output: &Path, cfg: &RunConfig) -> Result<PrepReport> {
    let mut cohort = Cohort::read_csv_path(input)?;
    let rows = cohort.n_rows();
    let features = cohort.n_features();
    let missing_before = cohort.missing_count();

    let flagged: usize = clean_cohort(&mut cohort)?.iter().sum();
    let interpolated = interpolate_cohort(&mut cohort)?;

    let ordinal: Vec<usize> = (0..features)
        .filter(|&f| cohort.specs[f].kind == FeatureKind::Ordinal)
        .collect();

    // Chained equations fill the non-ordinal columns; ordinal columns keep
    // their holes for the classifier stage.
    let kept: Vec<(usize, Vec<Option<f64>>)> =
        ordinal.iter().map(|&f| (f, cohort.column(f))).collect();
    let mice_filled = {
        let before: usize = (0..features)
            .filter(|f| !ordinal.contains(f))
            .map(|f| cohort.column(f).iter().filter(|v| v.is_none()).count())
            .sum();
        if cohort.missing_count() > 0 {
            let filled = mice_impute(&cohort.to_matrix(), cfg.mice_sweeps, cfg.master_seed)?;
            cohort.set_from_matrix(&filled)?;
            for (f, col) in &kept {
                cohort.set_column(*f, col)?;
            }
        }
        before
    };

    // Chained equations hand binary columns soft values; snap them back so
    // the written CSV keeps its 0/1 columns recognizably binary.
    for f in 0..features {
        if cohort.specs[f].kind == FeatureKind::Binary {
            let col: Vec<Option<f64>> = cohort
                .column(f)
                .iter()
                .map(|v| v.map(|x| if x >= 0.5 { 1.0 } else { 0.0 }))
                .collect();
            cohort.set_column(f, &col)?;
        }
    }

    let mut ordinal_filled = 0;
    for &f in &ordinal {
        let name = cohort.specs[f].name.clone();
        ordinal_filled += impute_diastolic(&mut cohort, &name)?;
    }

    let missing_after = cohort.missing_count();
    cohort.write_csv_path(output)?;

    Ok(PrepReport {
        rows,
        features,
        missing_before,
        flagged,
        interpolated,
        mice_filled,
        ordinal_filled,
        missing_after,
        output: output.to_path_buf(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::mask::mask_mcar;
    use crate::synth::tabular::{gen_tabular, GeneratorSpec};

    fn masked_csv(dir: &Path, rate: f64, seed: u64) -> (PathBuf, usize) {
        let (mut cohort, _) = gen_tabular(&GeneratorSpec::demo(), 300, seed).unwrap();
        let full: Vec<Vec<f64>> = cohort
            .to_matrix()
            .into_iter()
            .map(|row| row.into_iter().map(Option::unwrap).collect())
            .collect();
        let (masked, _) = mask_mcar(&full, rate, seed ^ 1).unwrap();
        for (r, row) in masked.iter().enumerate() {
            for (f, v) in row.iter().enumerate() {
                cohort.set_value(r, f, *v).unwrap();
            }
        }
        let holes = cohort.missing_count();
        let path = dir.join("cohort.csv");
        cohort.write_csv_path(&path).unwrap();
        (path, holes)
    }

    #[test]
    fn fills_every_hole_and_counts_each_stage_once() {
        let dir = tempfile::tempdir().unwrap();
        let (input, holes) = masked_csv(dir.path(), 0.08, 5);
        assert!(holes > 0);

        let out = dir.path().join("prepared.csv");
        let report = cmd_prep(&input, &out, &RunConfig::default()).unwrap();

        assert_eq!(report.missing_before, holes);
        assert_eq!(report.missing_after, 0);
        // Cleaning may flag a stray cell (which must then be re-filled), so
        // the fills across stages account for every hole exactly once.
        assert_eq!(
            report.interpolated + report.mice_filled + report.ordinal_filled,
            report.missing_before + report.flagged,
            "stage counts must account for every hole exactly once"
        );

        let prepared = Cohort::read_csv_path(&out).unwrap();
        assert_eq!(prepared.missing_count(), 0);
        assert_eq!(prepared.n_rows(), report.rows);
    }

    #[test]
    fn complete_cohort_passes_through_unchanged() {
        let dir = tempfile::tempdir().unwrap();
        let (cohort, _) = gen_tabular(&GeneratorSpec::demo(), 200, 11).unwrap();
        let input = dir.path().join("cohort.csv");
        cohort.write_csv_path(&input).unwrap();

        let out = dir.path().join("prepared.csv");
        let report = cmd_prep(&input, &out, &RunConfig::default()).unwrap();
        assert_eq!(report.cells_changed(), 0, "{report:?}");
        assert_eq!(report.missing_after, 0);

        let prepared = Cohort::read_csv_path(&out).unwrap();
        for r in 0..cohort.n_rows() {
            for f in 0..cohort.n_features() {
                assert_eq!(prepared.value(r, f), cohort.value(r, f));
            }
        }
    }
}
