//! Plain logistic regression, fit by IRLS. With degree-1 branches, no weight
//! constraints, and only binary features, the additive model collapses to
//! exactly this; the baseline gives the gradient trainer something exact to
//! be checked against.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::nn::tensor::sigmoid;
use crate::tabular::linalg::irls_logistic;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LogisticFit {
    pub fn logodds(&self, row: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(row).map(|(w, x)| w * x).sum::<f64>()
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        sigmoid(self.logodds(row))
    }
}

/// Maximum-likelihood logistic regression over dense rows.
pub fn fit_logistic(rows: &[Vec<f64>], labels: &[u8]) -> Result<LogisticFit> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("logistic fit over no rows".into()));
    }
    if rows.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} rows vs {} labels",
            rows.len(),
            labels.len()
        )));
    }
    if labels.iter().all(|&y| y == labels[0]) {
        return Err(Error::SingleClass("logistic fit needs both classes".into()));
    }
    let p = rows[0].len();
    if rows.iter().any(|r| r.len() != p) {
        return Err(Error::ShapeMismatch("ragged feature rows".into()));
    }
    let x = DMatrix::from_fn(rows.len(), p + 1, |r, c| if c == p { 1.0 } else { rows[r][c] });
    let y = DVector::from_fn(labels.len(), |r, _| f64::from(labels[r]));
    let beta = irls_logistic(&x, &y)?;
    Ok(LogisticFit {
        weights: beta.as_slice()[..p].to_vec(),
        intercept: beta[p],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn synthetic(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let x0: f64 = rng.random_range(-1.0..1.0);
            let x1 = f64::from(rng.random_range(0..2u8));
            let z = 1.5 * x0 - 0.8 * x1 + 0.3;
            labels.push(u8::from(rng.random_range(0.0..1.0) < sigmoid(z)));
            rows.push(vec![x0, x1]);
        }
        (rows, labels)
    }

    #[test]
    fn score_equations_vanish_at_the_optimum() {
        let (rows, labels) = synthetic(2000, 4);
        let fit = fit_logistic(&rows, &labels).unwrap();
        // At the MLE, sum_i (p_i - y_i) x_i = 0 for every column and the
        // intercept.
        let mut score = vec![0.0; 3];
        for (row, &y) in rows.iter().zip(&labels) {
            let r = fit.predict(row) - f64::from(y);
            score[0] += r * row[0];
            score[1] += r * row[1];
            score[2] += r;
        }
        for s in score {
            assert!(s.abs() < 1e-4, "score residual {s}");
        }
    }

    #[test]
    fn recovers_generating_coefficients() {
        let (rows, labels) = synthetic(20000, 9);
        let fit = fit_logistic(&rows, &labels).unwrap();
        assert!((fit.weights[0] - 1.5).abs() < 0.15, "w0 = {}", fit.weights[0]);
        assert!((fit.weights[1] + 0.8).abs() < 0.15, "w1 = {}", fit.weights[1]);
        assert!((fit.intercept - 0.3).abs() < 0.15, "b = {}", fit.intercept);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(fit_logistic(&[], &[]).is_err());
        let rows = vec![vec![1.0], vec![2.0]];
        assert!(fit_logistic(&rows, &[1, 1]).is_err());
        assert!(fit_logistic(&rows, &[1]).is_err());
    }
}
