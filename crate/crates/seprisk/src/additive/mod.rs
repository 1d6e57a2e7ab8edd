//! The separable additive risk model and its constrained trainer.
//!
//! Log-odds are a sum of independent per-feature branches, so any feature's
//! effect on the odds can be read off globally, not just locally around one
//! sample. Continuous features get small polynomial branches (unit-norm
//! coefficients, non-negative fusion weight); binary features get a single
//! unconstrained weight; an optional video term adds the video network's
//! pre-sigmoid score under its own non-negative weight.

pub mod baseline;
pub mod model;
pub mod train;

pub use baseline::{fit_logistic, LogisticFit};
pub use model::{
    poly_features, AdditiveRiskModel, BinaryBranch, ModalityConfig, PolyBranch, MODEL_VERSION,
};
pub use train::{fuse_hierarchy, train, HierarchyModels, LossHistory, TrainConfig, TrainOutcome};
