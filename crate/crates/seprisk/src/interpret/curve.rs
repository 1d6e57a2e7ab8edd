use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::additive::model::AdditiveRiskModel;
use crate::cli::fsutil::write_atomic_string;
use crate::error::{Error, Result};
use crate::eval::stats::{mean, quantile, sample_sd};
use crate::interpret::hist::{class_histograms, ClassHistograms};
use crate::tabular::cohort::Cohort;

/// Grid settings for risk curves.
///
/// Defaults: 101 points spanning the 1st to 99th percentile of the cohort,
/// so extrapolated tails do not dominate the plot, and 20 histogram bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub points: usize,
    pub lo_quantile: f64,
    pub hi_quantile: f64,
    pub hist_bins: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { points: 101, lo_quantile: 0.01, hi_quantile: 0.99, hist_bins: 20 }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 2 points, got {}",
                self.points
            )));
        }
        if !(0.0..1.0).contains(&self.lo_quantile)
            || !(0.0..=1.0).contains(&self.hi_quantile)
            || self.lo_quantile >= self.hi_quantile
        {
            return Err(Error::InvalidArgument(format!(
                "grid quantiles [{}, {}] must satisfy 0 <= lo < hi <= 1",
                self.lo_quantile, self.hi_quantile
            )));
        }
        if self.hist_bins == 0 {
            return Err(Error::InvalidArgument("grid needs at least 1 histogram bin".into()));
        }
        Ok(())
    }
}

/// One run's curve over the shared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunCurve {
    pub run_id: usize,
    /// `w * p(x_norm)` at each grid point.
    pub logodds_contribution: Vec<f64>,
    /// `exp(contribution - min contribution over the grid)`. Referencing the
    /// curve to its own minimum cancels the contribution of every other
    /// feature, so curves are comparable across runs; the factor is exactly 1
    /// at the minimizing grid point and >= 1 elsewhere.
    pub odds_factor: Vec<f64>,
}

/// A feature's global odds-ratio curve with cross-run uncertainty and the
/// per-class population histograms plotted under it.
///
/// Separability makes the curve exact, not a local approximation: the
/// contribution at a grid point equals the change in the full model's
/// log-odds when this feature's branch is switched off, whatever the other
/// features are doing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskCurve {
    pub feature: String,
    /// Ascending grid in original (unnormalized) units.
    pub grid: Vec<f64>,
    pub runs: Vec<RunCurve>,
    /// Pointwise mean of the per-run odds factors.
    pub mean_odds: Vec<f64>,
    /// Pointwise sample standard deviation across runs; zero for one run.
    pub sd_odds: Vec<f64>,
    pub histograms: ClassHistograms,
}

/// Builds a feature's risk curve from one fitted model per run.
///
/// The grid spans the cohort's observed values between the configured
/// quantiles; each grid value is pushed through the model's stored
/// normalization before the branch polynomial is evaluated. Binary features
/// are rejected: a two-point "curve" is better reported as the single odds
/// ratio of [`binary_odds_ratio`].
pub fn risk_curve(
    models: &[&AdditiveRiskModel],
    feature: &str,
    grid_spec: &GridSpec,
    cohort: &Cohort,
) -> Result<RiskCurve> {
    grid_spec.validate()?;
    if models.is_empty() {
        return Err(Error::EmptyInput("risk curve over no models".into()));
    }
    if models.iter().any(|m| m.binary_branches.iter().any(|b| b.feature == feature)) {
        return Err(Error::InvalidArgument(format!(
            "'{feature}' is a binary branch; report exp(weight) instead of a curve"
        )));
    }
    let idx = cohort.feature_index(feature)?;
    let observed: Vec<f64> =
        (0..cohort.n_rows()).filter_map(|r| cohort.value(r, idx)).collect();
    if observed.is_empty() {
        return Err(Error::EmptyInput(format!("no observed values of '{feature}'")));
    }
    let lo = quantile(&observed, grid_spec.lo_quantile)?;
    let hi = quantile(&observed, grid_spec.hi_quantile)?;
    if lo >= hi {
        return Err(Error::InvalidArgument(format!(
            "'{feature}' is constant over the grid quantiles; no curve to draw"
        )));
    }
    let step = (hi - lo) / (grid_spec.points - 1) as f64;
    let grid: Vec<f64> = (0..grid_spec.points).map(|i| lo + step * i as f64).collect();

    let mut runs = Vec::with_capacity(models.len());
    for (run_id, m) in models.iter().enumerate() {
        let branch = m.find_poly_branch(feature)?;
        let col = m.norm_stats.feature_index(feature)?;
        let contributions: Vec<f64> = grid
            .iter()
            .map(|&x| branch.contribution(m.norm_stats.apply_value(col, x)))
            .collect();
        let min = contributions.iter().cloned().fold(f64::INFINITY, f64::min);
        let odds_factor = contributions.iter().map(|&c| (c - min).exp()).collect();
        runs.push(RunCurve { run_id, logodds_contribution: contributions, odds_factor });
    }
    let mut mean_odds = Vec::with_capacity(grid.len());
    let mut sd_odds = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let at_point: Vec<f64> = runs.iter().map(|r| r.odds_factor[i]).collect();
        mean_odds.push(mean(&at_point)?);
        sd_odds.push(if at_point.len() < 2 { 0.0 } else { sample_sd(&at_point)? });
    }
    let histograms = class_histograms(cohort, feature, grid_spec.hist_bins)?;
    Ok(RiskCurve { feature: feature.to_string(), grid, runs, mean_odds, sd_odds, histograms })
}

/// Odds-ratio factor for a large change of one feature, `x -> x + dx` in
/// original units: `exp(w (p(x'_norm) - p(x_norm)))`. The normalization
/// extrapolates linearly outside the training range.
pub fn large_change_odds(
    model: &AdditiveRiskModel,
    feature: &str,
    x: f64,
    dx: f64,
) -> Result<f64> {
    let branch = model.find_poly_branch(feature)?;
    let col = model.norm_stats.feature_index(feature)?;
    let before = branch.poly(model.norm_stats.apply_value(col, x));
    let after = branch.poly(model.norm_stats.apply_value(col, x + dx));
    Ok((branch.weight * (after - before)).exp())
}

/// Odds ratio of a binary feature's positive level: `exp(weight)`, the
/// two-point analogue of a risk curve.
pub fn binary_odds_ratio(model: &AdditiveRiskModel, feature: &str) -> Result<f64> {
    model
        .binary_branches
        .iter()
        .find(|b| b.feature == feature)
        .map(|b| b.weight.exp())
        .ok_or_else(|| Error::UnknownFeature(feature.into()))
}

/// CSV rendering: one row per (run, grid point), run-major, columns
/// `feature,run_id,grid_value,logodds_contribution,odds_factor`.
pub fn curve_csv(curve: &RiskCurve) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["feature", "run_id", "grid_value", "logodds_contribution", "odds_factor"])
        .map_err(csv_err)?;
    for run in &curve.runs {
        for (i, &x) in curve.grid.iter().enumerate() {
            w.write_record([
                curve.feature.clone(),
                run.run_id.to_string(),
                x.to_string(),
                run.logodds_contribution[i].to_string(),
                run.odds_factor[i].to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv { line: 0, message: e.to_string() })?;
    String::from_utf8(bytes).map_err(|e| Error::Csv { line: 0, message: e.to_string() })
}

pub fn write_curve_csv(curve: &RiskCurve, path: &Path) -> Result<()> {
    write_atomic_string(path, &curve_csv(curve)?)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Csv { line: 0, message: e.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::additive::model::{BinaryBranch, ModalityConfig, PolyBranch, MODEL_VERSION};
    use crate::tabular::cohort::{FeatureSpec, Modality};
    use crate::tabular::normalize::{FeatureNorm, NormStats};
    use approx::assert_relative_eq;
    use chrono::NaiveDate;
    use std::f64::consts::E;

    fn unit_stats(names: &[&str]) -> NormStats {
        NormStats {
            features: names
                .iter()
                .map(|n| FeatureNorm { name: n.to_string(), min: -1.0, max: 1.0, bypass: false })
                .collect(),
        }
    }

    fn linear_model(weight: f64) -> AdditiveRiskModel {
        AdditiveRiskModel {
            version: MODEL_VERSION.into(),
            modalities: ModalityConfig::CD,
            scalar_branches: vec![PolyBranch {
                feature: "x".into(),
                degree: 1,
                coeffs: vec![1.0],
                weight,
            }],
            edm_branches: vec![],
            binary_branches: vec![],
            video_weight: None,
            bias: 0.3,
            norm_stats: unit_stats(&["x"]),
        }
    }

    fn cohort_over(values: &[f64], names: &[&str]) -> Cohort {
        // Column-major rows: every feature gets the same value set so the
        // grid quantiles are easy to reason about.
        let t = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let n = values.len();
        let mut cells = Vec::with_capacity(n * names.len());
        for &v in values {
            for _ in names {
                cells.push(Some(v));
            }
        }
        Cohort::new(
            names.iter().map(|n| FeatureSpec::continuous(n, Modality::Cd)).collect(),
            (0..n).map(|i| format!("p{i}")).collect(),
            vec![t; n],
            (0..n).map(|i| u8::from(i % 2 == 0)).collect(),
            cells,
        )
        .unwrap()
    }

    fn full_span() -> GridSpec {
        GridSpec { points: 3, lo_quantile: 0.0, hi_quantile: 1.0, hist_bins: 2 }
    }

    #[test]
    fn linear_unit_branch_gives_exponential_odds() {
        let m = linear_model(1.0);
        let c = cohort_over(&[-1.0, -0.5, 0.0, 0.5, 1.0], &["x"]);
        let curve = risk_curve(&[&m], "x", &full_span(), &c).unwrap();
        assert_eq!(curve.grid, vec![-1.0, 0.0, 1.0]);
        let run = &curve.runs[0];
        assert_relative_eq!(run.odds_factor[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(run.odds_factor[1], E, epsilon = 1e-12);
        assert_relative_eq!(run.odds_factor[2], E * E, epsilon = 1e-12);
    }

    #[test]
    fn zero_weight_gives_flat_unit_odds() {
        let m = linear_model(0.0);
        let c = cohort_over(&[-1.0, 0.0, 1.0, 2.0], &["x"]);
        let curve = risk_curve(&[&m], "x", &full_span(), &c).unwrap();
        assert!(curve.runs[0].odds_factor.iter().all(|&o| o == 1.0));
        assert!(curve.runs[0].logodds_contribution.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn odds_factor_is_one_at_the_minimum_and_never_below() {
        let m = AdditiveRiskModel {
            scalar_branches: vec![PolyBranch {
                feature: "x".into(),
                degree: 2,
                coeffs: vec![0.6, 0.8],
                weight: 1.7,
            }],
            ..linear_model(0.0)
        };
        let c = cohort_over(&[-2.0, -1.0, 0.0, 1.0, 2.0], &["x"]);
        let spec = GridSpec { points: 41, ..full_span() };
        let curve = risk_curve(&[&m], "x", &spec, &c).unwrap();
        let run = &curve.runs[0];
        let min = run.odds_factor.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_relative_eq!(min, 1.0, epsilon = 1e-15);
        assert!(run.odds_factor.iter().all(|&o| o >= 1.0));
    }

    #[test]
    fn single_run_band_has_zero_width() {
        let m = linear_model(1.3);
        let c = cohort_over(&[-1.0, 0.0, 1.0], &["x"]);
        let curve = risk_curve(&[&m], "x", &full_span(), &c).unwrap();
        assert!(curve.sd_odds.iter().all(|&s| s == 0.0));
        assert_eq!(curve.mean_odds, curve.runs[0].odds_factor);
    }

    #[test]
    fn band_is_pointwise_mean_and_sd_across_runs() {
        let a = linear_model(1.0);
        let b = linear_model(2.0);
        let c = cohort_over(&[-1.0, 0.0, 1.0], &["x"]);
        let curve = risk_curve(&[&a, &b], "x", &full_span(), &c).unwrap();
        // At the top grid point: factors e^2 and e^4.
        let hi = [(2.0f64).exp(), (4.0f64).exp()];
        assert_relative_eq!(curve.mean_odds[2], (hi[0] + hi[1]) / 2.0, epsilon = 1e-12);
        let sd = ((hi[0] - curve.mean_odds[2]).powi(2) + (hi[1] - curve.mean_odds[2]).powi(2))
            .sqrt();
        assert_relative_eq!(curve.sd_odds[2], sd, epsilon = 1e-12);
        assert_eq!(curve.runs.len(), 2);
        assert_eq!(curve.runs[0].run_id, 0);
        assert_eq!(curve.runs[1].run_id, 1);
    }

    /// Separability: the curve's contribution at a grid value equals the
    /// full-model log-odds change from switching the branch off, for any
    /// setting of the other features.
    #[test]
    fn curve_matches_full_model_logodds_difference() {
        let m = AdditiveRiskModel {
            scalar_branches: vec![
                PolyBranch {
                    feature: "x".into(),
                    degree: 3,
                    coeffs: vec![0.48, 0.6, 0.64],
                    weight: 1.9,
                },
                PolyBranch { feature: "other".into(), degree: 1, coeffs: vec![1.0], weight: 0.7 },
            ],
            norm_stats: unit_stats(&["x", "other"]),
            ..linear_model(0.0)
        };
        let mut off = m.clone();
        off.scalar_branches[0].weight = 0.0;
        let c = cohort_over(&[-1.0, -0.2, 0.4, 1.0], &["x", "other"]);
        let spec = GridSpec { points: 7, ..full_span() };
        let curve = risk_curve(&[&m], "x", &spec, &c).unwrap();
        let col = m.norm_stats.feature_index("x").unwrap();
        for (i, &x) in curve.grid.iter().enumerate() {
            for other in [-0.9, 0.0, 2.4] {
                let row = vec![m.norm_stats.apply_value(col, x), other];
                let with = m.logodds(&row, None).unwrap();
                let without = off.logodds(&row, None).unwrap();
                assert_relative_eq!(
                    curve.runs[0].logodds_contribution[i],
                    with - without,
                    epsilon = 1e-12
                );
            }
        }
    }

    /// Changing another feature's column leaves this feature's curve
    /// bit-identical, histograms included.
    #[test]
    fn curve_ignores_other_features_entirely() {
        let m = AdditiveRiskModel {
            scalar_branches: vec![
                PolyBranch { feature: "x".into(), degree: 1, coeffs: vec![1.0], weight: 1.2 },
                PolyBranch { feature: "other".into(), degree: 1, coeffs: vec![1.0], weight: 0.7 },
            ],
            norm_stats: unit_stats(&["x", "other"]),
            ..linear_model(0.0)
        };
        let mut c = cohort_over(&[-1.0, -0.3, 0.1, 0.6, 1.0], &["x", "other"]);
        let spec = GridSpec { points: 11, ..full_span() };
        let before = risk_curve(&[&m], "x", &spec, &c).unwrap();
        let other = c.feature_index("other").unwrap();
        let shuffled: Vec<Option<f64>> =
            c.column(other).into_iter().rev().map(|v| v.map(|v| v * 3.0 + 1.0)).collect();
        c.set_column(other, &shuffled).unwrap();
        let after = risk_curve(&[&m], "x", &spec, &c).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn rejects_binary_features_offering_the_single_ratio_instead() {
        let mut m = linear_model(1.0);
        m.binary_branches.push(BinaryBranch {
            feature: "flag".into(),
            modality: Modality::Cd,
            weight: -0.6,
        });
        m.norm_stats.features.push(FeatureNorm {
            name: "flag".into(),
            min: 0.0,
            max: 1.0,
            bypass: true,
        });
        let c = cohort_over(&[0.0, 1.0], &["x", "flag"]);
        let err = risk_curve(&[&m], "flag", &full_span(), &c).unwrap_err();
        assert!(err.to_string().contains("binary"));
        assert_relative_eq!(binary_odds_ratio(&m, "flag").unwrap(), (-0.6f64).exp(), epsilon = 1e-15);
        assert!(binary_odds_ratio(&m, "x").is_err());
    }

    #[test]
    fn large_change_examples() {
        let m = linear_model(1.0);
        // Identity normalization: stats span [-1, 1].
        assert_relative_eq!(large_change_odds(&m, "x", 0.2, 0.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(
            large_change_odds(&m, "x", 0.0, 0.5).unwrap(),
            (0.5f64).exp(),
            epsilon = 1e-12
        );
        let flat = linear_model(0.0);
        assert_relative_eq!(large_change_odds(&flat, "x", 0.1, 7.0).unwrap(), 1.0, epsilon = 1e-15);
        assert!(large_change_odds(&m, "missing", 0.0, 1.0).is_err());
    }

    #[test]
    fn grid_spans_the_requested_quantiles() {
        let m = linear_model(1.0);
        let values: Vec<f64> = (0..101).map(|i| i as f64 / 100.0).collect();
        let c = cohort_over(&values, &["x"]);
        let curve = risk_curve(&[&m], "x", &GridSpec::default(), &c).unwrap();
        assert_eq!(curve.grid.len(), 101);
        assert_relative_eq!(curve.grid[0], 0.01, epsilon = 1e-12);
        assert_relative_eq!(curve.grid[100], 0.99, epsilon = 1e-12);
        assert!(curve.grid.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_bad_grids_and_missing_features() {
        let m = linear_model(1.0);
        let c = cohort_over(&[-1.0, 0.0, 1.0], &["x"]);
        let bad = GridSpec { points: 1, ..GridSpec::default() };
        assert!(risk_curve(&[&m], "x", &bad, &c).is_err());
        let inverted = GridSpec { lo_quantile: 0.9, hi_quantile: 0.1, ..GridSpec::default() };
        assert!(risk_curve(&[&m], "x", &inverted, &c).is_err());
        assert!(risk_curve(&[], "x", &GridSpec::default(), &c).is_err());
        assert!(risk_curve(&[&m], "ghost", &GridSpec::default(), &c).is_err());
        let constant = cohort_over(&[2.0, 2.0, 2.0], &["x"]);
        assert!(risk_curve(&[&m], "x", &GridSpec::default(), &constant).is_err());
    }

    #[test]
    fn csv_is_run_major_with_one_row_per_grid_point() {
        let a = linear_model(1.0);
        let b = linear_model(2.0);
        let c = cohort_over(&[-1.0, 0.0, 1.0], &["x"]);
        let curve = risk_curve(&[&a, &b], "x", &full_span(), &c).unwrap();
        let text = curve_csv(&curve).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "feature,run_id,grid_value,logodds_contribution,odds_factor");
        assert_eq!(lines.len(), 1 + 2 * 3);
        assert_eq!(lines[1], "x,0,-1,-1,1");
        assert!(lines[4].starts_with("x,1,-1,"));
    }
}
