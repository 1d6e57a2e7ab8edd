//! The video branch: clip container, frame-level CNN + clip-level LSTM
//! network, its trainer, and feature-map export.

pub mod clip;
pub mod export;
pub mod net;
pub mod train;

pub use clip::VideoClip;
pub use export::{export_feature_maps, write_feature_maps, write_pgm};
pub use net::{LayerRow, VideoNet, VideoNetConfig, VideoScore};
pub use train::{score_clips, train_video, VideoTrainConfig, VideoTrainOutcome};
