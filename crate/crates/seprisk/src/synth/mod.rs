//! Seeded synthetic data with known ground truth: tabular cohorts whose
//! log-odds are exactly separable, videos with a latent-driven blob signal,
//! and MCAR masking for imputation scoring.

pub mod mask;
pub mod multimodal;
pub mod tabular;
pub mod video;

pub use mask::mask_mcar;
pub use multimodal::gen_multimodal;
pub use tabular::{gen_tabular, oracle_auc, EffectFn, FeatureDist, FeatureGen, GeneratorSpec};
pub use video::gen_videos;
