//! Mini-batch training of the additive model with projected RMSProp.
//!
//! Every optimizer step is followed by a projection that restores the model
//! invariants: each polynomial branch's coefficient vector is rescaled to
//! unit L2 norm with the norm folded into its fusion weight, then the fusion
//! weight (and the video weight) is clipped at zero. Binary weights and the
//! bias stay unconstrained.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::additive::model::{
    AdditiveRiskModel, BinaryBranch, ModalityConfig, PolyBranch, MODEL_VERSION,
};
use crate::error::{Error, Result};
use crate::nn::loss::{weighted_bce, ClassWeights};
use crate::nn::rmsprop::RmsProp;
use crate::nn::tensor::{logit, sigmoid};
use crate::tabular::cohort::{Cohort, FeatureKind, Modality};
use crate::tabular::normalize::NormStats;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub degree: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { max_epochs: 200, patience: 10, batch_size: 256, degree: 3, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 {
            return Err(Error::InvalidArgument("max_epochs must be >= 1".into()));
        }
        if self.patience >= self.max_epochs {
            return Err(Error::InvalidArgument(format!(
                "patience {} must be < max_epochs {}",
                self.patience, self.max_epochs
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
        }
        if self.degree == 0 {
            return Err(Error::InvalidArgument("degree must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-epoch losses over the full train and validation sets, and the epoch
/// whose parameters the returned model carries.
#[derive(Debug, Clone, PartialEq)]
pub struct LossHistory {
    pub train: Vec<f64>,
    pub validation: Vec<f64>,
    pub best_epoch: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: AdditiveRiskModel,
    pub history: LossHistory,
    /// Smallest constrained weight seen after any projected step; must never
    /// drop below zero.
    pub min_fusion_weight: f64,
}

/// Offsets into the flat parameter vector. Branch order follows cohort
/// column order so runs are reproducible.
struct PolySlot {
    feature: usize,
    name: String,
    modality: Modality,
    coeffs: usize,
    weight: usize,
}

struct BinarySlot {
    feature: usize,
    name: String,
    modality: Modality,
    weight: usize,
}

struct Layout {
    poly: Vec<PolySlot>,
    binary: Vec<BinarySlot>,
    video: Option<usize>,
    bias: usize,
    degree: usize,
    len: usize,
}

impl Layout {
    fn build(cohort: &Cohort, modalities: ModalityConfig, degree: usize) -> Result<Layout> {
        let mut poly = Vec::new();
        let mut binary = Vec::new();
        let mut off = 0;
        for (f, spec) in cohort.specs.iter().enumerate() {
            if !modalities.includes(spec.modality) {
                continue;
            }
            if spec.kind == FeatureKind::Binary {
                binary.push(BinarySlot {
                    feature: f,
                    name: spec.name.clone(),
                    modality: spec.modality,
                    weight: off,
                });
                off += 1;
            } else {
                poly.push(PolySlot {
                    feature: f,
                    name: spec.name.clone(),
                    modality: spec.modality,
                    coeffs: off,
                    weight: off + degree,
                });
                off += degree + 1;
            }
        }
        let video = if modalities.video {
            let v = off;
            off += 1;
            Some(v)
        } else {
            None
        };
        if poly.is_empty() && binary.is_empty() && video.is_none() {
            return Err(Error::InvalidArgument(
                "no features match the enabled modalities".into(),
            ));
        }
        let bias = off;
        Ok(Layout { poly, binary, video, bias, degree, len: off + 1 })
    }

    fn logodds(&self, params: &[f64], row: &[f64], video: f64) -> f64 {
        let mut z = params[self.bias];
        for s in &self.poly {
            let x = row[s.feature];
            let mut p = 0.0;
            let mut pow = 1.0;
            for d in 0..self.degree {
                pow *= x;
                p += params[s.coeffs + d] * pow;
            }
            z += params[s.weight] * p;
        }
        for s in &self.binary {
            z += params[s.weight] * row[s.feature];
        }
        if let Some(v) = self.video {
            z += params[v] * video;
        }
        z
    }

    /// Accumulates the gradient of the mean weighted BCE over one batch.
    fn batch_grad(
        &self,
        params: &[f64],
        x: &[Vec<f64>],
        y: &[u8],
        video: &[f64],
        batch: &[usize],
        weights: ClassWeights,
        grads: &mut [f64],
    ) {
        grads.fill(0.0);
        let scale = 1.0 / batch.len() as f64;
        for &i in batch {
            let row = &x[i];
            let p = sigmoid(self.logodds(params, row, video[i]));
            let resid = scale * weights.for_label(y[i]) * (p - f64::from(y[i]));
            for s in &self.poly {
                let xv = row[s.feature];
                let w = params[s.weight];
                let mut poly = 0.0;
                let mut pow = 1.0;
                for d in 0..self.degree {
                    pow *= xv;
                    grads[s.coeffs + d] += resid * w * pow;
                    poly += params[s.coeffs + d] * pow;
                }
                grads[s.weight] += resid * poly;
            }
            for s in &self.binary {
                grads[s.weight] += resid * row[s.feature];
            }
            if let Some(v) = self.video {
                grads[v] += resid * video[i];
            }
            grads[self.bias] += resid;
        }
    }

    /// Flips any branch whose starting polynomial anti-correlates with the
    /// outcome. `w·p` and `(-w)·(-p)` are the same function, so the start
    /// point may as well have `p` aligned: otherwise the first steps drive
    /// `w` into the clip at zero, where the coefficient gradient (which is
    /// proportional to `w`) vanishes and the branch can never recover.
    fn align_init_signs(
        &self,
        params: &mut [f64],
        x: &[Vec<f64>],
        y: &[u8],
        weights: ClassWeights,
        prevalence: f64,
    ) {
        for s in &self.poly {
            let mut g = 0.0;
            for (row, &yi) in x.iter().zip(y) {
                let xv = row[s.feature];
                let mut poly = 0.0;
                let mut pow = 1.0;
                for d in 0..self.degree {
                    pow *= xv;
                    poly += params[s.coeffs + d] * pow;
                }
                g += weights.for_label(yi) * (prevalence - f64::from(yi)) * poly;
            }
            if g > 0.0 {
                for a in &mut params[s.coeffs..s.coeffs + self.degree] {
                    *a = -*a;
                }
            }
        }
    }

    /// Restores branch invariants in place and returns the smallest
    /// constrained weight after projection.
    fn project(&self, params: &mut [f64]) -> f64 {
        let mut min_w = f64::INFINITY;
        for s in &self.poly {
            let range = s.coeffs..s.coeffs + self.degree;
            let norm = params[range.clone()].iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 0.0 {
                for a in &mut params[range] {
                    *a /= norm;
                }
                params[s.weight] *= norm;
            }
            params[s.weight] = params[s.weight].max(0.0);
            min_w = min_w.min(params[s.weight]);
        }
        if let Some(v) = self.video {
            params[v] = params[v].max(0.0);
            min_w = min_w.min(params[v]);
        }
        min_w
    }

    fn losses(
        &self,
        params: &[f64],
        x: &[Vec<f64>],
        y: &[u8],
        video: &[f64],
        weights: ClassWeights,
    ) -> Result<f64> {
        let probs: Vec<f64> = x
            .iter()
            .zip(video)
            .map(|(row, &v)| sigmoid(self.logodds(params, row, v)))
            .collect();
        weighted_bce(&probs, y, weights)
    }

    fn assemble(
        &self,
        params: &[f64],
        modalities: ModalityConfig,
        norm_stats: NormStats,
    ) -> AdditiveRiskModel {
        let mut scalar_branches = Vec::new();
        let mut edm_branches = Vec::new();
        for s in &self.poly {
            let branch = PolyBranch {
                feature: s.name.clone(),
                degree: self.degree,
                coeffs: params[s.coeffs..s.coeffs + self.degree].to_vec(),
                weight: params[s.weight],
            };
            match s.modality {
                Modality::Cd => scalar_branches.push(branch),
                Modality::Edm => edm_branches.push(branch),
            }
        }
        let binary_branches = self
            .binary
            .iter()
            .map(|s| BinaryBranch {
                feature: s.name.clone(),
                modality: s.modality,
                weight: params[s.weight],
            })
            .collect();
        AdditiveRiskModel {
            version: MODEL_VERSION.into(),
            modalities,
            scalar_branches,
            edm_branches,
            binary_branches,
            video_weight: self.video.map(|v| params[v]),
            bias: params[self.bias],
            norm_stats,
        }
    }
}

/// Trains an additive model on the given cohort rows. Normalization stats
/// are fit on the training rows only and stored in the model. `video_scores`
/// must cover every cohort row and is required exactly when the video
/// modality is enabled.
pub fn train(
    cohort: &Cohort,
    train_rows: &[usize],
    val_rows: &[usize],
    video_scores: Option<&[f64]>,
    modalities: ModalityConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_rows.is_empty() {
        return Err(Error::EmptyInput("training set is empty".into()));
    }
    if val_rows.is_empty() {
        return Err(Error::EmptyInput("validation set is empty".into()));
    }
    match (modalities.video, video_scores) {
        (true, None) => {
            return Err(Error::InvalidArgument(
                "video modality enabled but no video scores given".into(),
            ))
        }
        (_, Some(v)) if v.len() != cohort.n_rows() => {
            return Err(Error::ShapeMismatch(format!(
                "{} video scores for {} cohort rows",
                v.len(),
                cohort.n_rows()
            )));
        }
        _ => {}
    }

    let y_train: Vec<u8> = train_rows.iter().map(|&r| cohort.labels[r]).collect();
    let y_val: Vec<u8> = val_rows.iter().map(|&r| cohort.labels[r]).collect();
    let weights = ClassWeights::balanced(&y_train)?;
    let prevalence = y_train.iter().map(|&y| f64::from(y)).sum::<f64>() / y_train.len() as f64;

    let stats = NormStats::fit(cohort, train_rows)?;
    let x_train = stats.apply_cohort(cohort, train_rows)?;
    let x_val = stats.apply_cohort(cohort, val_rows)?;
    let select = |rows: &[usize]| -> Vec<f64> {
        match video_scores {
            Some(v) => rows.iter().map(|&r| v[r]).collect(),
            None => vec![0.0; rows.len()],
        }
    };
    let v_train = select(train_rows);
    let v_val = select(val_rows);

    let layout = Layout::build(cohort, modalities, cfg.degree)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = vec![0.0; layout.len];
    for s in &layout.poly {
        // Unit-norm coefficient start, so the fusion weight begins at
        // exactly 0.1. The all-zero draw is resampled.
        loop {
            for d in 0..cfg.degree {
                params[s.coeffs + d] = rng.random_range(-0.1..0.1);
            }
            let range = s.coeffs..s.coeffs + cfg.degree;
            let norm = params[range.clone()].iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 0.0 {
                for a in &mut params[range] {
                    *a /= norm;
                }
                break;
            }
        }
        params[s.weight] = 0.1;
    }
    if let Some(v) = layout.video {
        params[v] = 0.1;
    }
    params[layout.bias] = logit(prevalence);
    layout.align_init_signs(&mut params, &x_train, &y_train, weights, prevalence);
    let mut min_fusion_weight = layout.project(&mut params);

    let mut optimizer = RmsProp::new(layout.len);
    let mut grads = vec![0.0; layout.len];
    let mut order: Vec<usize> = (0..train_rows.len()).collect();

    let mut history = LossHistory { train: Vec::new(), validation: Vec::new(), best_epoch: 0 };
    let mut best_params = params.clone();
    let mut best_val = f64::INFINITY;
    let mut stale_epochs = 0;

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            layout.batch_grad(&params, &x_train, &y_train, &v_train, batch, weights, &mut grads);
            optimizer.step(&mut params, &grads)?;
            min_fusion_weight = min_fusion_weight.min(layout.project(&mut params));
        }
        let train_loss = layout.losses(&params, &x_train, &y_train, &v_train, weights)?;
        let val_loss = layout.losses(&params, &x_val, &y_val, &v_val, weights)?;
        history.train.push(train_loss);
        history.validation.push(val_loss);
        if val_loss < best_val {
            best_val = val_loss;
            best_params.copy_from_slice(&params);
            history.best_epoch = epoch;
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= cfg.patience {
                break;
            }
        }
    }

    let model = layout.assemble(&best_params, modalities, stats);
    model.validate()?;
    Ok(TrainOutcome { model, history, min_fusion_weight })
}

/// The four fused models compared in the modality study: clinical
/// descriptors alone, echo measures alone, both tabular modalities, and the
/// full tabular+video combination.
#[derive(Debug, Clone)]
pub struct HierarchyModels {
    pub cd: TrainOutcome,
    pub edm: TrainOutcome,
    pub cd_edm: TrainOutcome,
    pub all: TrainOutcome,
}

pub fn fuse_hierarchy(
    cohort: &Cohort,
    train_rows: &[usize],
    val_rows: &[usize],
    video_scores: &[f64],
    cfg: &TrainConfig,
) -> Result<HierarchyModels> {
    Ok(HierarchyModels {
        cd: train(cohort, train_rows, val_rows, None, ModalityConfig::CD, cfg)?,
        edm: train(cohort, train_rows, val_rows, None, ModalityConfig::EDM, cfg)?,
        cd_edm: train(cohort, train_rows, val_rows, None, ModalityConfig::CD_EDM, cfg)?,
        all: train(cohort, train_rows, val_rows, Some(video_scores), ModalityConfig::ALL, cfg)?,
    })
}
