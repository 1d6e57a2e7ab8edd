use crate::error::{Error, Result};

/// RMSProp with a per-parameter accumulator of squared gradients:
/// `s <- decay*s + (1-decay)*g^2`, then `theta <- theta - lr*g/(sqrt(s)+eps)`.
#[derive(Debug, Clone)]
pub struct RmsProp {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
    accum: Vec<f64>,
}

pub const DEFAULT_LR: f64 = 0.001;
pub const DEFAULT_DECAY: f64 = 0.9;
pub const DEFAULT_EPS: f64 = 1e-7;

impl RmsProp {
    pub fn new(n_params: usize) -> Self {
        Self::with_hyperparams(n_params, DEFAULT_LR, DEFAULT_DECAY, DEFAULT_EPS)
    }

    pub fn with_hyperparams(n_params: usize, learning_rate: f64, decay: f64, epsilon: f64) -> Self {
        RmsProp { learning_rate, decay, epsilon, accum: vec![0.0; n_params] }
    }

    pub fn accumulator(&self) -> &[f64] {
        &self.accum
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.accum.len() || grads.len() != self.accum.len() {
            return Err(Error::ShapeMismatch(format!(
                "rmsprop state holds {} parameters, got {} params / {} grads",
                self.accum.len(),
                params.len(),
                grads.len()
            )));
        }
        for ((s, p), &g) in self.accum.iter_mut().zip(params.iter_mut()).zip(grads) {
            *s = self.decay * *s + (1.0 - self.decay) * g * g;
            *p -= self.learning_rate * g / (s.sqrt() + self.epsilon);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut opt = RmsProp::new(3);
        let mut p = vec![1.0, -2.0, 0.5];
        opt.step(&mut p, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn first_step_matches_hand_computation() {
        let mut opt = RmsProp::new(1);
        let mut p = vec![0.0];
        opt.step(&mut p, &[1.0]).unwrap();
        assert_relative_eq!(opt.accumulator()[0], 0.1, epsilon = 1e-15);
        let expect = -0.001 / (0.1f64.sqrt() + 1e-7);
        assert_relative_eq!(p[0], expect, epsilon = 1e-15);
        assert!((p[0] + 0.0031623).abs() < 1e-6);
    }

    #[test]
    fn accumulator_converges_to_squared_gradient() {
        let mut opt = RmsProp::new(1);
        let mut p = vec![0.0];
        for _ in 0..500 {
            opt.step(&mut p, &[2.0]).unwrap();
        }
        assert_relative_eq!(opt.accumulator()[0], 4.0, epsilon = 1e-9);
    }

    #[test]
    fn rejects_shape_mismatch() {
        let mut opt = RmsProp::new(2);
        let mut p = vec![0.0, 0.0, 0.0];
        assert!(opt.step(&mut p, &[1.0, 1.0, 1.0]).is_err());
    }
}
