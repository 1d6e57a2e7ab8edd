use crate::error::{Error, Result};
use crate::eval::stats::{mean, sample_sd};

/// Bonferroni-corrected significance threshold: alpha = 0.01 over the 5
/// planned comparisons.
pub const SIGNIFICANCE_ALPHA: f64 = 0.01 / 5.0;

/// Paired t-test outcome for one model pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonResult {
    pub model_a: String,
    pub model_b: String,
    pub t: f64,
    pub p: f64,
    pub significant: bool,
}

/// Two-sided paired t-test on per-run metric pairs: `t = mean(d)/(sd(d)/sqrt(n))`
/// with the sample standard deviation, p from Student's t with n-1 degrees of
/// freedom. Zero-variance differences degenerate to an infinite t (significant)
/// or, when the differences are all zero, to t = 0.
pub fn paired_ttest(
    model_a: &str,
    model_b: &str,
    values_a: &[f64],
    values_b: &[f64],
) -> Result<ComparisonResult> {
    if values_a.len() != values_b.len() {
        return Err(Error::ShapeMismatch(format!(
            "paired test over {} vs {} values",
            values_a.len(),
            values_b.len()
        )));
    }
    if values_a.len() < 2 {
        return Err(Error::EmptyInput("paired test needs at least 2 pairs".into()));
    }
    let diffs: Vec<f64> = values_a.iter().zip(values_b).map(|(a, b)| a - b).collect();
    let n = diffs.len() as f64;
    let m = mean(&diffs)?;
    let sd = sample_sd(&diffs)?;

    let (t, p) = if sd == 0.0 {
        if m == 0.0 {
            (0.0, 1.0)
        } else {
            (m.signum() * f64::INFINITY, 0.0)
        }
    } else {
        let t = m / (sd / n.sqrt());
        (t, student_t_two_sided_p(t, n - 1.0))
    };
    Ok(ComparisonResult {
        model_a: model_a.into(),
        model_b: model_b.into(),
        t,
        p,
        significant: p < SIGNIFICANCE_ALPHA,
    })
}

/// Two-sided p-value of Student's t: `I_{nu/(nu+t^2)}(nu/2, 1/2)` via the
/// regularized incomplete beta function.
pub fn student_t_two_sided_p(t: f64, dof: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    if t == 0.0 {
        return 1.0;
    }
    let x = dof / (dof + t * t);
    incomplete_beta_reg(dof / 2.0, 0.5, x)
}

/// Lanczos approximation of ln Gamma (g = 7, 9 coefficients), accurate to
/// around 1e-14 for positive arguments.
fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x).
        return (std::f64::consts::PI / (std::f64::consts::PI * x).sin()).ln()
            - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, c) in COEFFS.iter().enumerate() {
        acc += c / (x + i as f64 + 1.0);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized incomplete beta `I_x(a, b)` by the Lentz continued fraction,
/// with the symmetry transform for fast convergence.
pub fn incomplete_beta_reg(a: f64, b: f64, x: f64) -> f64 {
    assert!((0.0..=1.0).contains(&x), "incomplete beta argument {x} outside [0,1]");
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    let ln_front =
        ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_cf(b, a, 1.0 - x) / b
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        // Even step.
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        // Odd step.
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}
