use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::additive::model::ModalityConfig;
use crate::additive::train::TrainConfig;
use crate::error::{Error, Result};
use crate::interpret::GridSpec;
use crate::tabular::mice::DEFAULT_SWEEPS;
use crate::video::train::VideoTrainConfig;

/// One config drives every subcommand. Unknown keys are rejected so a typo in
/// a config file fails loudly instead of silently running with a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Cohort CSV; required by train and interpret.
    pub cohort: Option<PathBuf>,
    /// Clip container aligned row-for-row with the cohort; required exactly
    /// when the video modality is enabled.
    pub clips: Option<PathBuf>,
    /// Root of the output layout (`runs/`, `metrics/`, `interpret/`).
    pub out: PathBuf,
    /// Enabled modalities as lowercase tokens: "cd", "edm", "video".
    pub modalities: Vec<String>,
    pub runs: usize,
    pub master_seed: u64,
    /// Polynomial degree of every tabular branch.
    pub degree: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub video_max_epochs: usize,
    pub video_patience: usize,
    pub video_batch_size: usize,
    /// Chained-equation sweeps used by prep.
    pub mice_sweeps: usize,
    /// Risk-curve grid and histogram settings used by interpret.
    pub grid: GridSpec,
    /// Also render one SVG plot per risk curve.
    pub emit_svg: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        let v = VideoTrainConfig::default();
        RunConfig {
            cohort: None,
            clips: None,
            out: PathBuf::from("seprisk_out"),
            modalities: vec!["cd".into(), "edm".into()],
            runs: 5,
            master_seed: 0,
            degree: t.degree,
            max_epochs: t.max_epochs,
            patience: t.patience,
            batch_size: t.batch_size,
            video_max_epochs: v.max_epochs,
            video_patience: v.patience,
            video_batch_size: v.batch_size,
            mice_sweeps: DEFAULT_SWEEPS,
            grid: GridSpec::default(),
            emit_svg: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(format!("serializing config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        self.modality_config()?;
        self.grid.validate()?;
        if self.mice_sweeps == 0 {
            return Err(Error::InvalidArgument("mice_sweeps must be >= 1".into()));
        }
        Ok(())
    }

    pub fn modality_config(&self) -> Result<ModalityConfig> {
        parse_modalities(&self.modalities.join(","))
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            max_epochs: self.max_epochs,
            patience: self.patience,
            batch_size: self.batch_size,
            degree: self.degree,
            seed: 0,
        }
    }

    pub fn video_train_config(&self) -> VideoTrainConfig {
        VideoTrainConfig {
            max_epochs: self.video_max_epochs,
            patience: self.video_patience,
            batch_size: self.video_batch_size,
            seed: 0,
        }
    }

    /// Cohort path or a validation error naming the flag that supplies it.
    pub fn cohort_path(&self) -> Result<&Path> {
        self.cohort
            .as_deref()
            .ok_or_else(|| Error::InvalidArgument("no cohort CSV given (set --cohort or \"cohort\" in the config)".into()))
    }

    pub fn clips_path(&self) -> Result<&Path> {
        self.clips
            .as_deref()
            .ok_or_else(|| Error::InvalidArgument("video modality enabled but no clip file given (set --clips or \"clips\" in the config)".into()))
    }
}

/// Parses a comma-separated modality list such as `cd,edm,video`.
pub fn parse_modalities(s: &str) -> Result<ModalityConfig> {
    let mut m = ModalityConfig { cd: false, edm: false, video: false };
    for raw in s.split(',') {
        let token = raw.trim().to_ascii_lowercase();
        let flag = match token.as_str() {
            "cd" => &mut m.cd,
            "edm" => &mut m.edm,
            "video" => &mut m.video,
            "" => return Err(Error::InvalidArgument(format!("empty modality token in {s:?}"))),
            _ => return Err(Error::InvalidArgument(format!("unknown modality {token:?} (expected cd, edm, video)"))),
        };
        if *flag {
            return Err(Error::InvalidArgument(format!("modality {token:?} listed twice")));
        }
        *flag = true;
    }
    Ok(m)
}

/// Inverse of [`parse_modalities`], used when flags override a config file.
pub fn modality_tokens(m: ModalityConfig) -> Vec<String> {
    let mut out = Vec::new();
    if m.cd {
        out.push("cd".to_string());
    }
    if m.edm {
        out.push("edm".to_string());
    }
    if m.video {
        out.push("video".to_string());
    }
    out
}
