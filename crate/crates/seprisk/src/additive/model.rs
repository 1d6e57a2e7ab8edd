use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::tensor::sigmoid;
use crate::tabular::cohort::{Cohort, Modality};
use crate::tabular::normalize::NormStats;

pub const MODEL_VERSION: &str = "seprisk-model/1";

/// One scalar feature's branch: a degree-D polynomial with no constant term
/// (the model bias absorbs it) scaled by a non-negative fusion weight. The
/// coefficient vector is kept at unit L2 norm so the weight alone carries the
/// branch magnitude and weights are comparable across features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyBranch {
    pub feature: String,
    pub degree: usize,
    pub coeffs: Vec<f64>,
    pub weight: f64,
}

impl PolyBranch {
    /// The polynomial part `p(x) = sum_d a_d x^d`, d = 1..=D.
    pub fn poly(&self, x_norm: f64) -> f64 {
        let mut acc = 0.0;
        let mut pow = 1.0;
        for a in &self.coeffs {
            pow *= x_norm;
            acc += a * pow;
        }
        acc
    }

    /// The branch's log-odds contribution `w * p(x)`.
    pub fn contribution(&self, x_norm: f64) -> f64 {
        self.weight * self.poly(x_norm)
    }
}

/// Branch for a binary feature: the raw 0/1 level times an unconstrained
/// weight, so the weight reads directly as the log-odds shift of level 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinaryBranch {
    pub feature: String,
    pub modality: Modality,
    pub weight: f64,
}

/// Which modalities feed the model. Video enters as one scalar score from
/// the video network, not as feature columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModalityConfig {
    pub cd: bool,
    pub edm: bool,
    pub video: bool,
}

impl ModalityConfig {
    pub const CD: ModalityConfig = ModalityConfig { cd: true, edm: false, video: false };
    pub const EDM: ModalityConfig = ModalityConfig { cd: false, edm: true, video: false };
    pub const CD_EDM: ModalityConfig = ModalityConfig { cd: true, edm: true, video: false };
    pub const ALL: ModalityConfig = ModalityConfig { cd: true, edm: true, video: true };

    pub fn includes(&self, modality: Modality) -> bool {
        match modality {
            Modality::Cd => self.cd,
            Modality::Edm => self.edm,
        }
    }
}

/// A separable risk model: log-odds are an exact sum of per-feature branch
/// contributions, optional video score term, and a bias, pushed through one
/// sigmoid. Separability is what makes global per-feature odds curves exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdditiveRiskModel {
    pub version: String,
    pub modalities: ModalityConfig,
    /// Polynomial branches over clinical-descriptor features.
    pub scalar_branches: Vec<PolyBranch>,
    /// Polynomial branches over echo-derived features.
    pub edm_branches: Vec<PolyBranch>,
    pub binary_branches: Vec<BinaryBranch>,
    /// Non-negative weight on the video network's pre-sigmoid score.
    pub video_weight: Option<f64>,
    pub bias: f64,
    pub norm_stats: NormStats,
}

/// The polynomial feature map `[x, x^2, ..., x^D]`; no constant term.
pub fn poly_features(x: f64, degree: usize) -> Result<Vec<f64>> {
    if degree < 1 {
        return Err(Error::InvalidArgument(format!("polynomial degree {degree} must be >= 1")));
    }
    let mut out = Vec::with_capacity(degree);
    let mut pow = 1.0;
    for _ in 0..degree {
        pow *= x;
        out.push(pow);
    }
    Ok(out)
}

impl AdditiveRiskModel {
    pub fn poly_branches(&self) -> impl Iterator<Item = &PolyBranch> {
        self.scalar_branches.iter().chain(&self.edm_branches)
    }

    pub fn find_poly_branch(&self, feature: &str) -> Result<&PolyBranch> {
        self.poly_branches()
            .find(|b| b.feature == feature)
            .ok_or_else(|| Error::UnknownFeature(feature.into()))
    }

    /// Log-odds of a normalized sample aligned with `norm_stats` column
    /// order. `video_score` is required exactly when the video modality is
    /// enabled.
    pub fn logodds(&self, row_norm: &[f64], video_score: Option<f64>) -> Result<f64> {
        if row_norm.len() != self.norm_stats.features.len() {
            return Err(Error::ShapeMismatch(format!(
                "sample has {} values, model expects {}",
                row_norm.len(),
                self.norm_stats.features.len()
            )));
        }
        let mut z = self.bias;
        for b in self.poly_branches() {
            let idx = self.norm_stats.feature_index(&b.feature)?;
            let x = row_norm[idx];
            if !x.is_finite() {
                return Err(Error::MissingValue { feature: b.feature.clone() });
            }
            z += b.contribution(x);
        }
        for b in &self.binary_branches {
            let idx = self.norm_stats.feature_index(&b.feature)?;
            let x = row_norm[idx];
            if !x.is_finite() {
                return Err(Error::MissingValue { feature: b.feature.clone() });
            }
            z += b.weight * x;
        }
        if self.modalities.video {
            let v = video_score.ok_or_else(|| {
                Error::InvalidArgument("video modality enabled but no video score given".into())
            })?;
            z += self.video_weight.unwrap_or(0.0) * v;
        }
        Ok(z)
    }

    pub fn predict_risk(&self, row_norm: &[f64], video_score: Option<f64>) -> Result<f64> {
        Ok(sigmoid(self.logodds(row_norm, video_score)?))
    }

    /// Normalizes the given cohort rows with the stored stats and returns
    /// event probabilities. `video_scores`, when present, must align with
    /// `rows`.
    pub fn score_cohort(
        &self,
        cohort: &Cohort,
        rows: &[usize],
        video_scores: Option<&[f64]>,
    ) -> Result<Vec<f64>> {
        if let Some(v) = video_scores {
            if v.len() != rows.len() {
                return Err(Error::ShapeMismatch(format!(
                    "{} video scores for {} rows",
                    v.len(),
                    rows.len()
                )));
            }
        }
        let matrix = self.norm_stats.apply_cohort(cohort, rows)?;
        matrix
            .iter()
            .enumerate()
            .map(|(i, row)| self.predict_risk(row, video_scores.map(|v| v[i])))
            .collect()
    }

    /// Structural validity: version, non-negative constrained weights, unit
    /// coefficient norms, every branch feature covered by the norm stats.
    pub fn validate(&self) -> Result<()> {
        if self.version != MODEL_VERSION {
            return Err(Error::ModelFile(format!(
                "unsupported model version {:?}, expected {MODEL_VERSION:?}",
                self.version
            )));
        }
        for b in self.poly_branches() {
            if b.coeffs.len() != b.degree {
                return Err(Error::ModelFile(format!(
                    "branch {} declares degree {} with {} coefficients",
                    b.feature,
                    b.degree,
                    b.coeffs.len()
                )));
            }
            if !(b.weight >= 0.0) {
                return Err(Error::ModelFile(format!(
                    "branch {} has negative fusion weight {}",
                    b.feature, b.weight
                )));
            }
            let norm = b.coeffs.iter().map(|a| a * a).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-6 {
                return Err(Error::ModelFile(format!(
                    "branch {} coefficient norm {norm} is not 1",
                    b.feature
                )));
            }
            self.norm_stats.feature_index(&b.feature)?;
        }
        for b in &self.binary_branches {
            self.norm_stats.feature_index(&b.feature)?;
        }
        if let Some(w) = self.video_weight {
            if !(w >= 0.0) {
                return Err(Error::ModelFile(format!("negative video weight {w}")));
            }
        }
        if self.modalities.video != self.video_weight.is_some() {
            return Err(Error::ModelFile(
                "video weight present iff video modality enabled".into(),
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::ModelFile(format!("serialization failed: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: AdditiveRiskModel = serde_json::from_str(text)
            .map_err(|e| Error::ModelFile(format!("malformed model file: {e}")))?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.validate()?;
        let text = self.to_json()?;
        crate::cli::fsutil::write_atomic_string(path, &text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}
