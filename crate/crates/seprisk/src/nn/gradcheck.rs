use crate::error::{Error, Result};

/// Default probe step for central differences.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Compares an analytic gradient against central finite differences of a
/// scalar function, returning the maximum relative error over coordinates:
/// `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn grad_check<F>(f: F, inputs: &[f64], analytic: &[f64], step: f64) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if inputs.len() != analytic.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} inputs vs {} analytic gradients",
            inputs.len(),
            analytic.len()
        )));
    }
    if !(step > 0.0) {
        return Err(Error::InvalidArgument("probe step must be positive".into()));
    }
    let coords: Vec<usize> = (0..inputs.len()).collect();
    grad_check_at(f, inputs, analytic, step, &coords)
}

/// Like `grad_check`, but probes only the given coordinates. Large models
/// are too expensive to probe exhaustively; callers sample coordinates from
/// every layer instead.
pub fn grad_check_at<F>(
    mut f: F,
    inputs: &[f64],
    analytic: &[f64],
    step: f64,
    coords: &[usize],
) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if inputs.len() != analytic.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} inputs vs {} analytic gradients",
            inputs.len(),
            analytic.len()
        )));
    }
    if !(step > 0.0) {
        return Err(Error::InvalidArgument("probe step must be positive".into()));
    }
    let mut probe = inputs.to_vec();
    let mut worst = 0.0f64;
    for &i in coords {
        if i >= inputs.len() {
            return Err(Error::InvalidArgument(format!(
                "probe coordinate {i} out of range for {} inputs",
                inputs.len()
            )));
        }
        let x0 = probe[i];
        probe[i] = x0 + step;
        let up = f(&probe)?;
        probe[i] = x0 - step;
        let down = f(&probe)?;
        probe[i] = x0;
        let numeric = (up - down) / (2.0 * step);
        let a = analytic[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
        if rel > worst {
            worst = rel;
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_quadratic() {
        // f(x) = sum x_i^2 has gradient 2x; central differences are exact for
        // quadratics up to rounding.
        let x = vec![0.3, -1.2, 2.5];
        let g: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let err = grad_check(
            |p| Ok(p.iter().map(|v| v * v).sum()),
            &x,
            &g,
            DEFAULT_STEP,
        )
        .unwrap();
        assert!(err < 1e-9, "rel err {err}");
    }

    #[test]
    fn detects_wrong_gradient() {
        let x = vec![1.0];
        let err = grad_check(|p| Ok(p[0] * p[0]), &x, &[3.0], DEFAULT_STEP).unwrap();
        assert!(err > 0.3);
    }

    #[test]
    fn rejects_length_mismatch() {
        assert!(grad_check(|_| Ok(0.0), &[1.0, 2.0], &[1.0], DEFAULT_STEP).is_err());
    }

    #[test]
    fn sampled_probe_checks_only_requested_coordinates() {
        // Analytic gradient wrong in coordinate 1, which is not probed.
        let x = vec![1.0, 2.0];
        let f = |p: &[f64]| Ok(p[0] * p[0] + p[1] * p[1]);
        let wrong = vec![2.0, 99.0];
        let err = grad_check_at(f, &x, &wrong, DEFAULT_STEP, &[0]).unwrap();
        assert!(err < 1e-9);
        let err = grad_check_at(f, &x, &wrong, DEFAULT_STEP, &[0, 1]).unwrap();
        assert!(err > 0.3);
        assert!(grad_check_at(f, &x, &wrong, DEFAULT_STEP, &[5]).is_err());
    }
}
