//! Separable multimodal risk models.
//!
//! The crate trains additive risk models whose log-odds decompose into
//! per-feature polynomial branches with non-negative fusion weights, plus an
//! optional CNN+LSTM video branch, all combined through one logistic output.
//! Because the decomposition is exact, each feature's contribution can be
//! read off as an odds-ratio curve.
//!
//! Modules:
//! - [`nn`]: tensor kernels with explicit gradients (conv, batch norm,
//!   pooling, LSTM, dense), weighted BCE and RMSProp.
//! - [`tabular`]: cohort loading, outlier cleaning, time interpolation,
//!   chained-equation imputation, normalization and stratified splits.
//! - [`synth`]: seeded synthetic cohort and video generators with known
//!   ground truth for end-to-end validation.
//! - [`additive`]: the separable model, its constrained trainer and the
//!   modality hierarchy.
//! - [`video`]: clip container, preprocessing and the CNN+LSTM scorer.
//! - [`eval`]: AUC, paired t-tests and the multi-run comparison protocol.
//! - [`interpret`]: odds-ratio risk curves, feature rankings, class
//!   histograms and SVG rendering.
//! - [`cli`]: the on-disk run layout and the subcommand entry points.

pub mod additive;
pub mod cli;
pub mod error;
pub mod eval;
pub mod interpret;
pub mod nn;
pub mod synth;
pub mod tabular;
pub mod video;

pub use error::{Error, Result};
