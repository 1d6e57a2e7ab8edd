use std::path::{Path, PathBuf};

use crate::additive::model::AdditiveRiskModel;
use crate::cli::config::RunConfig;
use crate::cli::fsutil::write_atomic_string;
use crate::error::{Error, Result};
use crate::eval::experiment::ModelKey;
use crate::interpret::{
    binary_odds_ratio, rank_features, render_ranking_table, render_svg, risk_curve,
    write_curve_csv, write_histogram_csv, FeatureRanking, SvgOptions,
};
use crate::tabular::cohort::Cohort;

#[derive(Debug, Clone)]
pub struct InterpretOutputs {
    /// Ranking table, one column per trained configuration.
    pub table: String,
    pub ranking_path: PathBuf,
    pub curve_files: Vec<PathBuf>,
    pub svg_files: Vec<PathBuf>,
    /// Single odds ratios of binary features, present only when the curve
    /// source has binary branches.
    pub binary_odds_path: Option<PathBuf>,
}

/// Per-config fitted models found under `out/runs`, every run present.
fn load_run_models(out: &Path) -> Result<Vec<(ModelKey, Vec<AdditiveRiskModel>)>> {
    let runs_dir = out.join("runs");
    let mut run_ids = Vec::new();
    let entries = std::fs::read_dir(&runs_dir).map_err(|e| {
        Error::InvalidArgument(format!("no run layout at {}: {e}", runs_dir.display()))
    })?;
    for entry in entries {
        let entry = entry?;
        if let Ok(id) = entry.file_name().to_string_lossy().parse::<usize>() {
            run_ids.push(id);
        }
    }
    run_ids.sort_unstable();
    if run_ids.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no runs found under {}",
            runs_dir.display()
        )));
    }

    let mut by_key = Vec::new();
    for key in [ModelKey::Cd, ModelKey::Edm, ModelKey::CdEdm, ModelKey::All] {
        let paths: Vec<PathBuf> = run_ids
            .iter()
            .map(|id| runs_dir.join(id.to_string()).join(key.dir_name()).join("model.json"))
            .collect();
        let present = paths.iter().filter(|p| p.is_file()).count();
        if present == 0 {
            continue;
        }
        if present < paths.len() {
            return Err(Error::InvalidArgument(format!(
                "configuration {} is missing from some runs ({present} of {} model files)",
                key.dir_name(),
                paths.len()
            )));
        }
        let models = paths.iter().map(|p| AdditiveRiskModel::load(p)).collect::<Result<_>>()?;
        by_key.push((key, models));
    }
    if by_key.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no model files under {}",
            runs_dir.display()
        )));
    }
    Ok(by_key)
}

fn curve_file_stem(feature: &str) -> String {
    feature
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

/// Ranks features per trained configuration and emits risk curves for the
/// widest configuration found on disk. The cohort supplies the evaluation
/// grid and the class histograms; a cohort whose schema does not match the
/// trained models is rejected.
pub fn cmd_interpret(cfg: &RunConfig) -> Result<InterpretOutputs> {
    cfg.validate()?;
    let cohort = Cohort::read_csv_path(cfg.cohort_path()?)?;
    let by_key = load_run_models(&cfg.out)?;
    let interpret_dir = cfg.out.join("interpret");

    let rankings: Vec<(ModelKey, FeatureRanking)> = by_key
        .iter()
        .map(|(key, models)| {
            let refs: Vec<&AdditiveRiskModel> = models.iter().collect();
            Ok((*key, rank_features(&refs)?))
        })
        .collect::<Result<_>>()?;
    let columns: Vec<(&str, &FeatureRanking)> =
        rankings.iter().map(|(key, r)| (key.label(), r)).collect();
    let table = render_ranking_table(&columns)?;
    let ranking_path = interpret_dir.join("ranking.txt");
    write_atomic_string(&ranking_path, &table)?;

    // Curves come from the widest configuration: the last in table order.
    let (_, curve_models) = by_key.last().expect("by_key checked non-empty");
    let curve_refs: Vec<&AdditiveRiskModel> = curve_models.iter().collect();
    let mut curve_files = Vec::new();
    let mut svg_files = Vec::new();
    let poly_features: Vec<String> =
        curve_models[0].poly_branches().map(|b| b.feature.clone()).collect();
    for feature in &poly_features {
        let curve = risk_curve(&curve_refs, feature, &cfg.grid, &cohort)?;
        let stem = curve_file_stem(feature);
        let csv_path = interpret_dir.join("curves").join(format!("{stem}.csv"));
        write_curve_csv(&curve, &csv_path)?;
        let hist_path = interpret_dir.join("curves").join(format!("{stem}_hist.csv"));
        write_histogram_csv(&curve.histograms, &hist_path)?;
        curve_files.push(csv_path);
        curve_files.push(hist_path);
        if cfg.emit_svg {
            let svg_path = interpret_dir.join("curves").join(format!("{stem}.svg"));
            let opts = SvgOptions { title: Some(feature.clone()), ..SvgOptions::default() };
            crate::cli::fsutil::write_atomic_string(&svg_path, &render_svg(&curve, &opts))?;
            svg_files.push(svg_path);
        }
    }

    let binary_features: Vec<String> =
        curve_models[0].binary_branches.iter().map(|b| b.feature.clone()).collect();
    let binary_odds_path = if binary_features.is_empty() {
        None
    } else {
        let mut text = String::from("feature,run_id,odds_ratio\n");
        for feature in &binary_features {
            for (run_id, model) in curve_models.iter().enumerate() {
                let or = binary_odds_ratio(model, feature)?;
                text.push_str(&format!("{feature},{run_id},{or}\n"));
            }
        }
        let path = interpret_dir.join("binary_odds.csv");
        write_atomic_string(&path, &text)?;
        Some(path)
    };

    Ok(InterpretOutputs { table, ranking_path, curve_files, svg_files, binary_odds_path })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::synth::{cmd_synth, SynthOptions};
    use crate::cli::train::cmd_train;
    use crate::interpret::GridSpec;

    fn trained_cfg(dir: &Path) -> RunConfig {
        let synth = cmd_synth(dir, &SynthOptions { rows: 240, seed: 31, ..SynthOptions::default() })
            .unwrap();
        let cfg = RunConfig {
            cohort: Some(synth.cohort_path),
            out: dir.join("out"),
            runs: 2,
            max_epochs: 15,
            batch_size: 64,
            grid: GridSpec { points: 9, ..GridSpec::default() },
            ..RunConfig::default()
        };
        cmd_train(&cfg).unwrap();
        cfg
    }

    #[test]
    fn emits_ranking_and_curves_for_the_widest_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = trained_cfg(dir.path());
        let out = cmd_interpret(&cfg).unwrap();

        assert!(out.table.contains("CD+EDM"));
        assert!(out.table.contains("age"));
        // Binary and null features rank; binary features get no curve.
        assert!(out.table.contains("male_sex"));
        assert!(out.ranking_path.is_file());
        assert!(out.binary_odds_path.as_ref().unwrap().is_file());

        // 10 polynomial features (11 demo features minus the binary one),
        // each with a curve CSV and a histogram CSV.
        assert_eq!(out.curve_files.len(), 20);
        assert!(!out.curve_files.iter().any(|p| p.to_string_lossy().contains("male_sex")));
        let age_csv = out
            .curve_files
            .iter()
            .find(|p| p.file_name().unwrap() == "age.csv")
            .expect("age curve file");
        let text = std::fs::read_to_string(age_csv).unwrap();
        // Header plus runs x grid points rows.
        assert_eq!(text.lines().count(), 1 + 2 * 9);
    }

    #[test]
    fn svg_emission_is_opt_in() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = trained_cfg(dir.path());
        assert!(cmd_interpret(&cfg).unwrap().svg_files.is_empty());
        cfg.emit_svg = true;
        let out = cmd_interpret(&cfg).unwrap();
        assert_eq!(out.svg_files.len(), 10);
        let svg = std::fs::read_to_string(&out.svg_files[0]).unwrap();
        assert!(svg.starts_with("<svg"));
    }

    #[test]
    fn mismatched_cohort_schema_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = trained_cfg(dir.path());
        // A cohort missing the trained features cannot anchor the curves.
        let other = cmd_synth(
            &dir.path().join("other"),
            &SynthOptions { rows: 60, seed: 32, ..SynthOptions::default() },
        )
        .unwrap();
        let mut cohort = Cohort::read_csv_path(&other.cohort_path).unwrap();
        cohort.specs[0].name = "renamed".into();
        cohort.write_csv_path(&other.cohort_path).unwrap();
        cfg.cohort = Some(other.cohort_path);
        let err = cmd_interpret(&cfg).unwrap_err();
        assert!(err.is_validation(), "{err}");
    }

    #[test]
    fn incomplete_run_layout_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = trained_cfg(dir.path());
        std::fs::remove_file(
            cfg.out.join("runs").join("1").join("cd_edm").join("model.json"),
        )
        .unwrap();
        let err = cmd_interpret(&cfg).unwrap_err();
        assert!(err.to_string().contains("missing from some runs"), "{err}");
    }
}
