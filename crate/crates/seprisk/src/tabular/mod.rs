//! Tabular cohort handling: CSV ingestion, outlier cleaning, per-patient
//! time interpolation, chained-equation imputation, diastolic ordinal
//! encoding, min-max normalization and stratified splitting.

pub mod clean;
pub mod cohort;
pub mod diastolic;
pub mod interpolate;
pub(crate) mod linalg;
pub mod mice;
pub mod normalize;
pub mod split;

pub use clean::{clean_cohort, clean_outliers, CleanOutcome};
pub use cohort::{Cohort, FeatureKind, FeatureSpec, Modality};
pub use diastolic::{encode_diastolic, impute_diastolic, DIASTOLIC_CLASSES};
pub use interpolate::{interpolate_cohort, interpolate_series};
pub use mice::{masked_rmse, mice_impute, DEFAULT_SWEEPS};
pub use normalize::{FeatureNorm, NormStats};
pub use split::{split_cohort, SplitIndices};
