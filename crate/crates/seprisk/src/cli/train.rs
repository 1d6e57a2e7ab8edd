use std::path::{Path, PathBuf};

use crate::cli::config::RunConfig;
use crate::cli::fsutil::write_atomic_string;
use crate::error::Result;
use crate::eval::experiment::{run_experiment, ExperimentConfig, ExperimentReport};
use crate::tabular::cohort::Cohort;
use crate::video::clip::read_svid_path;
use crate::video::net::VideoNetConfig;

#[derive(Debug, Clone)]
pub struct TrainOutputs {
    pub report: ExperimentReport,
    /// One `model.json` per run and trained configuration.
    pub model_files: Vec<PathBuf>,
    pub metrics_text: PathBuf,
    pub metrics_json: PathBuf,
}

/// Directory of one fitted model within the output layout.
pub fn model_dir(out: &Path, run_id: usize, config_dir: &str) -> PathBuf {
    out.join("runs").join(run_id.to_string()).join(config_dir)
}

/// Runs the full multi-run protocol from a config: loads the cohort (and
/// clips only when the video modality asks for them), trains every enabled
/// configuration per run, and persists models plus metrics under `cfg.out`.
/// Reruns with the same config and master seed rewrite identical bytes.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainOutputs> {
    cfg.validate()?;
    let modalities = cfg.modality_config()?;
    let cohort = Cohort::read_csv_path(cfg.cohort_path()?)?;
    let clips = if modalities.video { Some(read_svid_path(cfg.clips_path()?)?) } else { None };

    let video_net = match clips.as_deref().and_then(<[_]>::first) {
        Some(clip) => {
            let (frames, height, width) = clip.dims();
            VideoNetConfig { frames, height, width, ..VideoNetConfig::full_scale() }
        }
        None => VideoNetConfig::full_scale(),
    };
    let ecfg = ExperimentConfig {
        runs: cfg.runs,
        master_seed: cfg.master_seed,
        modalities,
        train: cfg.train_config(),
        video: cfg.video_train_config(),
        video_net,
    };
    let outcome = run_experiment(&cohort, clips.as_deref(), &ecfg)?;

    let mut model_files = Vec::new();
    for art in &outcome.artifacts {
        for (key, model) in &art.models {
            let path = model_dir(&cfg.out, art.run_id, key.dir_name()).join("model.json");
            model.save(&path)?;
            model_files.push(path);
        }
    }

    let metrics_dir = cfg.out.join("metrics");
    let metrics_text = metrics_dir.join("metrics.txt");
    let metrics_json = metrics_dir.join("metrics.json");
    write_atomic_string(&metrics_text, &outcome.report.render_table())?;
    write_atomic_string(&metrics_json, &outcome.report.render_json())?;
    write_atomic_string(&cfg.out.join("config.json"), &cfg.to_json()?)?;

    Ok(TrainOutputs { report: outcome.report, model_files, metrics_text, metrics_json })
}
