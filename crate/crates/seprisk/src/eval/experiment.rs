//! The multi-run comparison protocol: independent reshuffled runs, the
//! modality hierarchy trained per run on identical splits, test AUCs
//! aggregated as mean (sd), and the five planned paired t-tests.

use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::additive::train::{train as train_additive, LossHistory, TrainConfig, TrainOutcome};
use crate::additive::{fuse_hierarchy, AdditiveRiskModel, ModalityConfig};
use crate::error::{Error, Result};
use crate::eval::auc::auc;
use crate::eval::stats::{mean, sample_sd};
use crate::eval::ttest::{paired_ttest, ComparisonResult, SIGNIFICANCE_ALPHA};
use crate::tabular::{split_cohort, Cohort, SplitIndices};
use crate::video::{score_clips, train_video, VideoClip, VideoNet, VideoNetConfig, VideoTrainConfig};

/// Model configurations the protocol reports, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKey {
    Cd,
    Edm,
    Video,
    CdEdm,
    All,
}

impl ModelKey {
    pub fn label(self) -> &'static str {
        match self {
            ModelKey::Cd => "CD",
            ModelKey::Edm => "EDM",
            ModelKey::Video => "Video",
            ModelKey::CdEdm => "CD+EDM",
            ModelKey::All => "All 3",
        }
    }

    /// Directory-safe name for the on-disk run layout.
    pub fn dir_name(self) -> &'static str {
        match self {
            ModelKey::Cd => "cd",
            ModelKey::Edm => "edm",
            ModelKey::Video => "video",
            ModelKey::CdEdm => "cd_edm",
            ModelKey::All => "all",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Independent runs; each reshuffles the splits with its own seed.
    pub runs: usize,
    /// Single entropy source; every per-run seed derives from it.
    pub master_seed: u64,
    /// Which modalities the protocol covers. Video sits on top of the
    /// CD -> CD+EDM hierarchy, so it requires both tabular modalities.
    pub modalities: ModalityConfig,
    pub train: TrainConfig,
    pub video: VideoTrainConfig,
    /// Network shape for the video branch; ignored without clips.
    pub video_net: VideoNetConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            runs: 5,
            master_seed: 0,
            modalities: ModalityConfig::CD_EDM,
            train: TrainConfig::default(),
            video: VideoTrainConfig::default(),
            video_net: VideoNetConfig::full_scale(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs < 2 {
            return Err(Error::InvalidArgument(format!(
                "paired comparisons need at least 2 runs, got {}",
                self.runs
            )));
        }
        if !self.modalities.cd && !self.modalities.edm {
            return Err(Error::InvalidArgument(
                "experiment needs at least one tabular modality".into(),
            ));
        }
        if self.modalities.video && !(self.modalities.cd && self.modalities.edm) {
            return Err(Error::InvalidArgument(
                "the video model fuses on top of CD+EDM; enable both tabular modalities".into(),
            ));
        }
        self.train.validate()?;
        self.video.validate()
    }

    /// Model configurations this experiment trains, in table order.
    pub fn keys(&self) -> Vec<ModelKey> {
        let m = self.modalities;
        let mut keys = Vec::new();
        if m.cd {
            keys.push(ModelKey::Cd);
        }
        if m.edm {
            keys.push(ModelKey::Edm);
        }
        if m.video {
            keys.push(ModelKey::Video);
        }
        if m.cd && m.edm {
            keys.push(ModelKey::CdEdm);
        }
        if m.video {
            keys.push(ModelKey::All);
        }
        keys
    }
}

/// One run's measurements: test AUC, loss history and fitted weights per
/// model configuration.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub run_id: usize,
    pub split_seed: u64,
    pub aucs: Vec<(ModelKey, f64)>,
    pub histories: Vec<(ModelKey, LossHistory)>,
    /// Fusion weights by feature name; the video branch appears as "video".
    pub weights: Vec<(ModelKey, Vec<(String, f64)>)>,
}

impl RunReport {
    pub fn auc(&self, key: ModelKey) -> Option<f64> {
        self.aucs.iter().find(|(k, _)| *k == key).map(|(_, a)| *a)
    }
}

/// The heavyweight per-run outputs, kept out of [`RunReport`] so reports stay
/// cheap to aggregate: fitted models for persistence plus the split they were
/// trained on.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub run_id: usize,
    pub models: Vec<(ModelKey, AdditiveRiskModel)>,
    pub video_net: Option<VideoNet>,
    pub split: SplitIndices,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub runs: Vec<RunReport>,
    pub comparisons: Vec<ComparisonResult>,
}

/// Everything `run_experiment` produces: the aggregated report plus per-run
/// artifacts for saving.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub artifacts: Vec<RunArtifacts>,
}

/// Seeds drawn up front per run so parallel execution cannot reorder them.
#[derive(Debug, Clone, Copy)]
struct RunSeeds {
    split: u64,
    additive: u64,
    video_init: u64,
    video_train: u64,
}

fn weight_snapshot(model: &AdditiveRiskModel) -> Vec<(String, f64)> {
    let mut snap: Vec<(String, f64)> = model
        .poly_branches()
        .map(|b| (b.feature.clone(), b.weight))
        .chain(model.binary_branches.iter().map(|b| (b.feature.clone(), b.weight)))
        .collect();
    if let Some(w) = model.video_weight {
        snap.push(("video".into(), w));
    }
    snap
}

struct RunModel {
    key: ModelKey,
    outcome: TrainOutcome,
}

fn run_once(
    cohort: &Cohort,
    clips: Option<&[VideoClip]>,
    cfg: &ExperimentConfig,
    run_id: usize,
    seeds: RunSeeds,
) -> Result<(RunReport, RunArtifacts)> {
    let split = split_cohort(&cohort.labels, seeds.split)?;
    let tc = TrainConfig { seed: seeds.additive, ..cfg.train.clone() };

    let mut aucs = Vec::new();
    let mut histories = Vec::new();
    let mut weights = Vec::new();
    let mut models = Vec::new();
    let test_labels: Vec<u8> = split.test.iter().map(|&r| cohort.labels[r]).collect();

    let push_model = |m: RunModel,
                          aucs: &mut Vec<(ModelKey, f64)>,
                          histories: &mut Vec<(ModelKey, LossHistory)>,
                          weights: &mut Vec<(ModelKey, Vec<(String, f64)>)>,
                          models: &mut Vec<(ModelKey, AdditiveRiskModel)>,
                          test_scores: Option<&[f64]>|
     -> Result<()> {
        let probs = m.outcome.model.score_cohort(cohort, &split.test, test_scores)?;
        aucs.push((m.key, auc(&probs, &test_labels)?));
        histories.push((m.key, m.outcome.history));
        weights.push((m.key, weight_snapshot(&m.outcome.model)));
        models.push((m.key, m.outcome.model));
        Ok(())
    };

    let video_net = if let Some(clips) = clips {
        let net = VideoNet::init(cfg.video_net.clone(), seeds.video_init)?;
        let vtc = VideoTrainConfig { seed: seeds.video_train, ..cfg.video.clone() };
        let out = train_video(net, clips, &cohort.labels, &split.train, &split.validation, &vtc)?;
        let scores = score_clips(&out.net, clips)?;

        let test_scores: Vec<f64> = split.test.iter().map(|&r| scores[r]).collect();
        aucs.push((ModelKey::Video, auc(&test_scores, &test_labels)?));
        histories.push((ModelKey::Video, out.history.clone()));

        let h = fuse_hierarchy(cohort, &split.train, &split.validation, &scores, &tc)?;
        let rm = |key, outcome| RunModel { key, outcome };
        push_model(rm(ModelKey::Cd, h.cd), &mut aucs, &mut histories, &mut weights, &mut models, None)?;
        push_model(rm(ModelKey::Edm, h.edm), &mut aucs, &mut histories, &mut weights, &mut models, None)?;
        push_model(rm(ModelKey::CdEdm, h.cd_edm), &mut aucs, &mut histories, &mut weights, &mut models, None)?;
        push_model(
            rm(ModelKey::All, h.all),
            &mut aucs,
            &mut histories,
            &mut weights,
            &mut models,
            Some(&test_scores),
        )?;
        Some(out.net)
    } else {
        for (key, modalities) in [
            (ModelKey::Cd, ModalityConfig::CD),
            (ModelKey::Edm, ModalityConfig::EDM),
            (ModelKey::CdEdm, ModalityConfig::CD_EDM),
        ] {
            if !cfg.keys().contains(&key) {
                continue;
            }
            let outcome = train_additive(cohort, &split.train, &split.validation, None, modalities, &tc)?;
            push_model(
                RunModel { key, outcome },
                &mut aucs,
                &mut histories,
                &mut weights,
                &mut models,
                None,
            )?;
        }
        None
    };

    // Table order regardless of the order models were trained in.
    let order = [ModelKey::Cd, ModelKey::Edm, ModelKey::Video, ModelKey::CdEdm, ModelKey::All];
    let rank = |k: ModelKey| order.iter().position(|&o| o == k).expect("known key");
    aucs.sort_by_key(|(k, _)| rank(*k));
    histories.sort_by_key(|(k, _)| rank(*k));

    Ok((
        RunReport { run_id, split_seed: seeds.split, aucs, histories, weights },
        RunArtifacts { run_id, models, video_net, split },
    ))
}

/// The full protocol: for each run, reshuffle the splits with a run-specific
/// seed, train every enabled model configuration on that run's identical
/// splits, and score the held-out test rows. Comparisons are the five planned
/// pairs (three single-modality contrasts and the two fusion steps), each a
/// two-sided paired t-test at the Bonferroni-corrected threshold, restricted
/// to the configurations the modality set enables; clips are required exactly
/// when the video modality is on. Runs execute on separate threads; the
/// aggregation order is fixed by run id.
pub fn run_experiment(
    cohort: &Cohort,
    clips: Option<&[VideoClip]>,
    cfg: &ExperimentConfig,
) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    match clips {
        Some(c) if !cfg.modalities.video => {
            let _ = c;
            return Err(Error::InvalidArgument(
                "clips given but the video modality is disabled".into(),
            ));
        }
        None if cfg.modalities.video => {
            return Err(Error::InvalidArgument(
                "video modality enabled but no clips given".into(),
            ));
        }
        _ => {}
    }
    if let Some(c) = clips {
        if c.len() != cohort.n_rows() {
            return Err(Error::ShapeMismatch(format!(
                "{} clips for {} cohort rows",
                c.len(),
                cohort.n_rows()
            )));
        }
    }

    let mut seed_rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
    let run_seeds: Vec<RunSeeds> = (0..cfg.runs)
        .map(|_| RunSeeds {
            split: seed_rng.random(),
            additive: seed_rng.random(),
            video_init: seed_rng.random(),
            video_train: seed_rng.random(),
        })
        .collect();

    let results: Vec<Result<(RunReport, RunArtifacts)>> = std::thread::scope(|s| {
        let handles: Vec<_> = run_seeds
            .iter()
            .enumerate()
            .map(|(run_id, &seeds)| s.spawn(move || run_once(cohort, clips, cfg, run_id, seeds)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("run thread panicked")).collect()
    });

    let mut runs = Vec::with_capacity(cfg.runs);
    let mut artifacts = Vec::with_capacity(cfg.runs);
    for r in results {
        let (report, art) = r?;
        runs.push(report);
        artifacts.push(art);
    }

    let report = ExperimentReport { runs, comparisons: Vec::new() };
    // The planned comparisons: the three single-input contrasts and the two
    // fusion steps, restricted to the configurations actually trained.
    let planned = [
        (ModelKey::Cd, ModelKey::Edm),
        (ModelKey::Cd, ModelKey::Video),
        (ModelKey::Edm, ModelKey::Video),
        (ModelKey::Cd, ModelKey::CdEdm),
        (ModelKey::CdEdm, ModelKey::All),
    ];
    let trained = cfg.keys();
    let mut comparisons = Vec::new();
    for &(a, b) in planned.iter().filter(|(a, b)| trained.contains(a) && trained.contains(b)) {
        comparisons.push(paired_ttest(
            a.label(),
            b.label(),
            &report.per_run_aucs(a)?,
            &report.per_run_aucs(b)?,
        )?);
    }

    Ok(ExperimentOutcome { report: ExperimentReport { comparisons, ..report }, artifacts })
}

impl ExperimentReport {
    /// Keys present in every run, in table order.
    pub fn keys(&self) -> Vec<ModelKey> {
        [ModelKey::Cd, ModelKey::Edm, ModelKey::Video, ModelKey::CdEdm, ModelKey::All]
            .into_iter()
            .filter(|&k| self.runs.iter().all(|r| r.auc(k).is_some()))
            .collect()
    }

    pub fn per_run_aucs(&self, key: ModelKey) -> Result<Vec<f64>> {
        self.runs
            .iter()
            .map(|r| {
                r.auc(key).ok_or_else(|| {
                    Error::InvalidArgument(format!("run {} has no {} model", r.run_id, key.label()))
                })
            })
            .collect()
    }

    pub fn mean_sd(&self, key: ModelKey) -> Result<(f64, f64)> {
        let aucs = self.per_run_aucs(key)?;
        Ok((mean(&aucs)?, sample_sd(&aucs)?))
    }

    pub fn comparison(&self, a: ModelKey, b: ModelKey) -> Option<&ComparisonResult> {
        self.comparisons
            .iter()
            .find(|c| c.model_a == a.label() && c.model_b == b.label())
    }

    /// Plain-text rendering: mean (sd) AUC per model input, one row per
    /// configuration, followed by the paired-test table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Model performance: average test AUC and standard");
        let _ = writeln!(out, "deviation over {} independent runs.", self.runs.len());
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<8}  {}", "Input", "AUC mean (sd)");
        for key in self.keys() {
            let (m, sd) = self.mean_sd(key).expect("keys() only returns complete models");
            let _ = writeln!(out, "{:<8}  {:.3} ({:.3})", key.label(), m, sd);
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "Paired two-sided t-tests, alpha = {SIGNIFICANCE_ALPHA}:");
        for c in &self.comparisons {
            let verdict = if c.significant { "significant" } else { "not significant" };
            let _ = writeln!(
                out,
                "{:<18}  t = {:+.4}  p = {:.6}  {}",
                format!("{} vs {}", c.model_a, c.model_b),
                c.t,
                c.p,
                verdict
            );
        }
        out
    }

    /// Structured metrics report: per-run AUCs, per-model mean and sd, and
    /// the comparison table. Key order is fixed, so the rendering is
    /// byte-reproducible for identical inputs.
    pub fn render_json(&self) -> String {
        let keys = self.keys();
        let runs: Vec<_> = self
            .runs
            .iter()
            .map(|r| {
                json!({
                    "run_id": r.run_id,
                    "split_seed": r.split_seed,
                    "auc": serde_json::Map::from_iter(
                        r.aucs.iter().map(|(k, a)| (k.label().to_string(), json!(a))),
                    ),
                })
            })
            .collect();
        let summary: Vec<_> = keys
            .iter()
            .map(|&k| {
                let per_run = self.per_run_aucs(k).expect("complete model");
                let (m, sd) = self.mean_sd(k).expect("complete model");
                json!({
                    "model": k.label(),
                    "per_run_auc": per_run,
                    "mean": m,
                    "sd": sd,
                })
            })
            .collect();
        let comparisons: Vec<_> = self
            .comparisons
            .iter()
            .map(|c| {
                json!({
                    "model_a": c.model_a,
                    "model_b": c.model_b,
                    "t": c.t,
                    "p": c.p,
                    "significant": c.significant,
                })
            })
            .collect();
        let doc = json!({
            "runs": runs,
            "summary": summary,
            "comparisons": comparisons,
            "alpha": SIGNIFICANCE_ALPHA,
        });
        serde_json::to_string_pretty(&doc).expect("report serialization cannot fail") + "\n"
    }
}
