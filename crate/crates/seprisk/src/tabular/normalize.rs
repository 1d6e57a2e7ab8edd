use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::cohort::{Cohort, FeatureKind};

/// Per-feature training min/max for the [-1, 1] normalization
/// `x' = 2(x - min)/(max - min) - 1`, stored with the model so inference
/// reuses the training mapping.
///
/// Binary features bypass the mapping: they enter the model as raw 0/1 so a
/// branch weight reads directly as the log-odds shift of the positive level.
/// A constant feature (max = min) maps to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub features: Vec<FeatureNorm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureNorm {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub bypass: bool,
}

impl NormStats {
    /// Measures min/max per feature over the given training rows, skipping
    /// missing cells.
    pub fn fit(cohort: &Cohort, rows: &[usize]) -> Result<NormStats> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("normalization fit over no rows".into()));
        }
        let mut features = Vec::with_capacity(cohort.n_features());
        for f in 0..cohort.n_features() {
            let spec = &cohort.specs[f];
            let mut min = f64::INFINITY;
            let mut max = f64::NEG_INFINITY;
            for &r in rows {
                if let Some(v) = cohort.value(r, f) {
                    min = min.min(v);
                    max = max.max(v);
                }
            }
            if min > max {
                return Err(Error::EmptyInput(format!(
                    "feature {} has no observed training values",
                    spec.name
                )));
            }
            features.push(FeatureNorm {
                name: spec.name.clone(),
                min,
                max,
                bypass: spec.kind == FeatureKind::Binary,
            });
        }
        Ok(NormStats { features })
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.features
            .iter()
            .position(|f| f.name == name)
            .ok_or_else(|| Error::UnknownFeature(name.into()))
    }

    /// Normalizes one value. No clamping: test values outside the training
    /// range extrapolate beyond [-1, 1].
    pub fn apply_value(&self, feature: usize, x: f64) -> f64 {
        let f = &self.features[feature];
        if f.bypass {
            return x;
        }
        if f.max == f.min {
            return 0.0;
        }
        2.0 * (x - f.min) / (f.max - f.min) - 1.0
    }

    /// Inverse of `apply_value` for non-constant, non-bypass features.
    pub fn invert_value(&self, feature: usize, x_norm: f64) -> f64 {
        let f = &self.features[feature];
        if f.bypass || f.max == f.min {
            return x_norm;
        }
        f.min + (x_norm + 1.0) * (f.max - f.min) / 2.0
    }

    /// Normalizes the given rows into a dense matrix. Missing cells are an
    /// error: imputation runs upstream of normalization.
    pub fn apply_cohort(&self, cohort: &Cohort, rows: &[usize]) -> Result<Vec<Vec<f64>>> {
        if self.features.len() != cohort.n_features() {
            return Err(Error::ShapeMismatch(format!(
                "norm stats cover {} features, cohort has {}",
                self.features.len(),
                cohort.n_features()
            )));
        }
        for (f, fs) in self.features.iter().enumerate() {
            if fs.name != cohort.specs[f].name {
                return Err(Error::ShapeMismatch(format!(
                    "norm stats feature {} does not match cohort column {}",
                    fs.name, cohort.specs[f].name
                )));
            }
        }
        rows.iter()
            .map(|&r| {
                (0..cohort.n_features())
                    .map(|f| {
                        cohort
                            .value(r, f)
                            .map(|v| self.apply_value(f, v))
                            .ok_or_else(|| Error::MissingValue {
                                feature: cohort.specs[f].name.clone(),
                            })
                    })
                    .collect()
            })
            .collect()
    }
}
