use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::nn::tensor::sigmoid;

/// Solves the ridge-regularized normal equations `(A + lambda*I) x = b` for a
/// symmetric positive semidefinite `A`, via Cholesky with an LU fallback.
pub(crate) fn solve_regularized(a: DMatrix<f64>, b: DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    let p = a.nrows();
    let reg = a + DMatrix::identity(p, p) * lambda;
    if let Some(chol) = reg.clone().cholesky() {
        return Ok(chol.solve(&b));
    }
    reg.lu()
        .solve(&b)
        .ok_or_else(|| Error::Numeric("singular normal equations".into()))
}

/// Ridge least squares `min ||X beta - y||^2 + lambda ||beta||^2`.
pub(crate) fn least_squares_ridge(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
) -> Result<DVector<f64>> {
    solve_regularized(x.transpose() * x, x.transpose() * y, lambda)
}

const IRLS_RIDGE: f64 = 1e-6;
const IRLS_MAX_ITER: usize = 50;
const IRLS_TOL: f64 = 1e-8;
const PROB_CLAMP: f64 = 1e-10;

/// Logistic regression fit by iteratively reweighted least squares. The
/// design matrix must include its own intercept column.
pub(crate) fn irls_logistic(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let (n, p) = (x.nrows(), x.ncols());
    let mut beta = DVector::zeros(p);
    for _ in 0..IRLS_MAX_ITER {
        let eta = x * &beta;
        let mut xtwx = DMatrix::zeros(p, p);
        let mut xtwz = DVector::zeros(p);
        for r in 0..n {
            let mu = sigmoid(eta[r]).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            let w = mu * (1.0 - mu);
            let z = eta[r] + (y[r] - mu) / w;
            for a in 0..p {
                let xa = x[(r, a)];
                xtwz[a] += w * xa * z;
                for b in a..p {
                    xtwx[(a, b)] += w * xa * x[(r, b)];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                xtwx[(a, b)] = xtwx[(b, a)];
            }
        }
        let next = solve_regularized(xtwx, xtwz, IRLS_RIDGE)?;
        let delta = (&next - &beta).amax();
        beta = next;
        if delta < IRLS_TOL {
            break;
        }
    }
    Ok(beta)
}
