//! Model interpretation: weight-based feature rankings, exact per-feature
//! odds-ratio curves with cross-run uncertainty and class histograms, and
//! large-change odds ratios.
//!
//! Everything here exploits separability: a branch's effect on the log-odds
//! is `w * p(x)` regardless of the other features, so a feature's curve is a
//! global statement about the model, not a local approximation around a
//! reference patient.

pub mod curve;
pub mod hist;
pub mod rank;
pub mod svg;

pub use curve::{
    binary_odds_ratio, curve_csv, large_change_odds, risk_curve, write_curve_csv, GridSpec,
    RiskCurve, RunCurve,
};
pub use hist::{class_histograms, histogram_csv, write_histogram_csv, ClassHistograms};
pub use rank::{rank_features, render_ranking_table, FeatureRanking, ModalityTag, RankedFeature};
pub use svg::{render_svg, write_svg, SvgOptions};
