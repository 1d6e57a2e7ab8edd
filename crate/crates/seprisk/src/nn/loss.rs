use crate::error::{Error, Result};

/// Per-class weights for the binary cross-entropy loss, balancing prevalence
/// so each class contributes equally: `w_c = n / (2 * n_c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassWeights {
    pub w0: f64,
    pub w1: f64,
}

impl ClassWeights {
    pub fn uniform() -> Self {
        ClassWeights { w0: 1.0, w1: 1.0 }
    }

    pub fn balanced(labels: &[u8]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyInput("class weights over empty labels".into()));
        }
        let n1 = labels.iter().filter(|&&y| y == 1).count();
        let n0 = labels.len() - n1;
        if n0 == 0 || n1 == 0 {
            return Err(Error::SingleClass("class weights need both classes present".into()));
        }
        let n = labels.len() as f64;
        Ok(ClassWeights { w0: n / (2.0 * n0 as f64), w1: n / (2.0 * n1 as f64) })
    }

    pub fn for_label(&self, y: u8) -> f64 {
        if y == 1 {
            self.w1
        } else {
            self.w0
        }
    }
}

const CLAMP: f64 = 1e-12;

/// Class-weighted binary cross-entropy, averaged over samples. Log arguments
/// are clamped at 1e-12 so perfect predictions stay finite.
pub fn weighted_bce(predictions: &[f64], labels: &[u8], weights: ClassWeights) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::EmptyInput("loss over empty predictions".into()));
    }
    if predictions.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions vs {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let mut total = 0.0;
    for (&p, &y) in predictions.iter().zip(labels) {
        let w = weights.for_label(y);
        let term = if y == 1 {
            p.max(CLAMP).ln()
        } else {
            (1.0 - p).max(CLAMP).ln()
        };
        total -= w * term;
    }
    Ok(total / predictions.len() as f64)
}

/// Gradient of `weighted_bce` with respect to each prediction. Zero where the
/// clamp is active, matching the flat loss there.
pub fn weighted_bce_grad(
    predictions: &[f64],
    labels: &[u8],
    weights: ClassWeights,
) -> Result<Vec<f64>> {
    if predictions.is_empty() {
        return Err(Error::EmptyInput("loss gradient over empty predictions".into()));
    }
    if predictions.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions vs {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let n = predictions.len() as f64;
    Ok(predictions
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let w = weights.for_label(y);
            if y == 1 {
                if p <= CLAMP {
                    0.0
                } else {
                    -w / (p * n)
                }
            } else if 1.0 - p <= CLAMP {
                0.0
            } else {
                w / ((1.0 - p) * n)
            }
        })
        .collect())
}
