//! Evaluation: AUC, summary statistics, paired significance tests and the
//! multi-run comparison protocol.

pub mod auc;
pub mod experiment;
pub mod stats;
pub mod ttest;

pub use auc::{auc, auc_brute_force};
pub use experiment::{
    run_experiment, ExperimentConfig, ExperimentOutcome, ExperimentReport, ModelKey, RunArtifacts,
    RunReport,
};
pub use ttest::{paired_ttest, ComparisonResult, SIGNIFICANCE_ALPHA};
