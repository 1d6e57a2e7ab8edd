use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::additive::model::AdditiveRiskModel;
use crate::error::{Error, Result};
use crate::tabular::cohort::Modality;

/// Which branch family a ranked feature belongs to. Video gets its own tag:
/// the video branch weights a network score, not a cohort column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModalityTag {
    Cd,
    Edm,
    Video,
}

impl ModalityTag {
    pub fn label(self) -> &'static str {
        match self {
            ModalityTag::Cd => "CD",
            ModalityTag::Edm => "EDM",
            ModalityTag::Video => "Video",
        }
    }
}

impl From<Modality> for ModalityTag {
    fn from(m: Modality) -> Self {
        match m {
            Modality::Cd => ModalityTag::Cd,
            Modality::Edm => ModalityTag::Edm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub feature: String,
    /// Mean fusion weight across the input models. Binary branches use the
    /// absolute weight: their sign is unconstrained, so only the magnitude
    /// measures importance.
    pub weight: f64,
    pub modality: ModalityTag,
}

/// Features ordered by weight, descending; ties break lexicographically by
/// name so the ranking is deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub entries: Vec<RankedFeature>,
    /// How many per-run models the weights were averaged over.
    pub runs: usize,
}

impl FeatureRanking {
    pub fn find(&self, feature: &str) -> Option<&RankedFeature> {
        self.entries.iter().find(|e| e.feature == feature)
    }
}

/// Ranks features of one model, or of a set of per-run models of the same
/// configuration, by (mean) fusion weight.
pub fn rank_features(models: &[&AdditiveRiskModel]) -> Result<FeatureRanking> {
    let first = *models
        .first()
        .ok_or_else(|| Error::EmptyInput("feature ranking over no models".into()))?;
    for m in models {
        m.validate()?;
        let same_shape = m.scalar_branches.len() == first.scalar_branches.len()
            && m.edm_branches.len() == first.edm_branches.len()
            && m.binary_branches.len() == first.binary_branches.len()
            && m.modalities == first.modalities
            && m.poly_branches()
                .zip(first.poly_branches())
                .all(|(a, b)| a.feature == b.feature)
            && m.binary_branches
                .iter()
                .zip(&first.binary_branches)
                .all(|(a, b)| a.feature == b.feature);
        if !same_shape {
            return Err(Error::ShapeMismatch(
                "ranking across models with different branch structure".into(),
            ));
        }
    }
    let n = models.len() as f64;
    let mut entries = Vec::new();
    for (i, b) in first.scalar_branches.iter().enumerate() {
        let w = models.iter().map(|m| m.scalar_branches[i].weight).sum::<f64>() / n;
        entries.push(RankedFeature {
            feature: b.feature.clone(),
            weight: w,
            modality: ModalityTag::Cd,
        });
    }
    for (i, b) in first.edm_branches.iter().enumerate() {
        let w = models.iter().map(|m| m.edm_branches[i].weight).sum::<f64>() / n;
        entries.push(RankedFeature {
            feature: b.feature.clone(),
            weight: w,
            modality: ModalityTag::Edm,
        });
    }
    for (i, b) in first.binary_branches.iter().enumerate() {
        let w = models.iter().map(|m| m.binary_branches[i].weight.abs()).sum::<f64>() / n;
        entries.push(RankedFeature {
            feature: b.feature.clone(),
            weight: w,
            modality: ModalityTag::from(b.modality),
        });
    }
    if first.modalities.video {
        let w = models.iter().map(|m| m.video_weight.unwrap_or(0.0)).sum::<f64>() / n;
        entries.push(RankedFeature {
            feature: "video".into(),
            weight: w,
            modality: ModalityTag::Video,
        });
    }
    entries.sort_by(|a, b| {
        b.weight
            .partial_cmp(&a.weight)
            .expect("weights are finite")
            .then_with(|| a.feature.cmp(&b.feature))
    });
    Ok(FeatureRanking { entries, runs: models.len() })
}

/// Fixed-width comparison table: one row per feature, one weight column per
/// model configuration, `-` where a configuration lacks the feature.
///
/// Rows follow the last configuration's ranking (the widest model when the
/// columns go CD, EDM, ..., All); features it lacks follow alphabetically.
pub fn render_ranking_table(configs: &[(&str, &FeatureRanking)]) -> Result<String> {
    if configs.is_empty() {
        return Err(Error::EmptyInput("ranking table over no configurations".into()));
    }
    let last = configs[configs.len() - 1].1;
    let mut rows: Vec<(String, ModalityTag)> = last
        .entries
        .iter()
        .map(|e| (e.feature.clone(), e.modality))
        .collect();
    let mut rest: Vec<(String, ModalityTag)> = Vec::new();
    for (_, ranking) in configs {
        for e in &ranking.entries {
            let seen = rows.iter().chain(&rest).any(|(name, _)| *name == e.feature);
            if !seen {
                rest.push((e.feature.clone(), e.modality));
            }
        }
    }
    rest.sort_by(|a, b| a.0.cmp(&b.0));
    rows.extend(rest);

    let name_w = rows
        .iter()
        .map(|(name, _)| name.len())
        .chain(["feature".len()])
        .max()
        .unwrap();
    let col_w = configs.iter().map(|(label, _)| label.len().max(6)).collect::<Vec<_>>();
    let mut out = String::new();
    write!(out, "{:<name_w$}  {:<8}", "feature", "modality").unwrap();
    for ((label, _), &w) in configs.iter().zip(&col_w) {
        write!(out, "  {label:>w$}").unwrap();
    }
    out.push('\n');
    for (name, tag) in &rows {
        write!(out, "{:<name_w$}  {:<8}", name, tag.label()).unwrap();
        for ((_, ranking), &w) in configs.iter().zip(&col_w) {
            match ranking.find(name) {
                Some(e) => write!(out, "  {:>w$.2}", e.weight).unwrap(),
                None => write!(out, "  {:>w$}", "-").unwrap(),
            }
        }
        out.push('\n');
    }
    Ok(out)
}
