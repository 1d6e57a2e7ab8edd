use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

/// Per-channel batch normalization over `[N, C, H, W]` input.
///
/// Batch statistics use the biased variance. Running statistics are tracked
/// with exponential moving averages (`running = m*running + (1-m)*batch`) and
/// are used only at inference time; they are non-trainable state.
#[derive(Debug, Clone)]
pub struct BatchNorm {
    pub channels: usize,
    pub gamma: Tensor,
    pub beta: Tensor,
    pub running_mean: Tensor,
    pub running_var: Tensor,
    pub momentum: f64,
    pub eps: f64,
}

#[derive(Debug, Clone)]
pub struct BatchNormGrads {
    pub gamma: Tensor,
    pub beta: Tensor,
}

/// Values captured during the training forward pass that the backward pass
/// reuses.
#[derive(Debug, Clone)]
pub struct BatchNormCache {
    x_hat: Tensor,
    inv_std: Vec<f64>,
}

pub const DEFAULT_MOMENTUM: f64 = 0.99;
pub const DEFAULT_EPS: f64 = 1e-3;

impl BatchNorm {
    pub fn new(channels: usize) -> Self {
        BatchNorm {
            channels,
            gamma: Tensor::filled(&[channels], 1.0),
            beta: Tensor::zeros(&[channels]),
            running_mean: Tensor::zeros(&[channels]),
            running_var: Tensor::filled(&[channels], 1.0),
            momentum: DEFAULT_MOMENTUM,
            eps: DEFAULT_EPS,
        }
    }

    /// Trainable parameters: gamma and beta, two per channel.
    pub fn param_count(&self) -> usize {
        2 * self.channels
    }

    /// Non-trainable state: running mean and variance, two per channel.
    pub fn state_count(&self) -> usize {
        2 * self.channels
    }

    fn check_input(&self, input: &Tensor) -> Result<(usize, usize, usize)> {
        let s = input.shape();
        if s.len() != 4 {
            return Err(Error::ShapeMismatch(format!(
                "batch norm expects [N,C,H,W] input, got {:?}",
                s
            )));
        }
        if s[1] != self.channels {
            return Err(Error::ShapeMismatch(format!(
                "batch norm configured for {} channels, got {}",
                self.channels, s[1]
            )));
        }
        Ok((s[0], s[2], s[3]))
    }

    /// Training-mode forward pass. Normalizes with batch statistics and steps
    /// the running averages.
    pub fn forward_train(&mut self, input: &Tensor) -> Result<(Tensor, BatchNormCache)> {
        let (n, h, w) = self.check_input(input)?;
        if n * h * w == 0 {
            return Err(Error::EmptyInput("batch norm over empty batch".into()));
        }
        let c = self.channels;
        let m = (n * h * w) as f64;
        let x = input.data();

        let mut out = Tensor::zeros(input.shape());
        let mut x_hat = Tensor::zeros(input.shape());
        let mut inv_std = vec![0.0; c];

        for ch in 0..c {
            let mut sum = 0.0;
            let mut sq = 0.0;
            for ni in 0..n {
                let base = (ni * c + ch) * h * w;
                for i in 0..h * w {
                    let v = x[base + i];
                    sum += v;
                    sq += v * v;
                }
            }
            let mean = sum / m;
            let var = (sq / m - mean * mean).max(0.0);
            let istd = 1.0 / (var + self.eps).sqrt();
            inv_std[ch] = istd;

            self.running_mean.data_mut()[ch] =
                self.momentum * self.running_mean.data()[ch] + (1.0 - self.momentum) * mean;
            self.running_var.data_mut()[ch] =
                self.momentum * self.running_var.data()[ch] + (1.0 - self.momentum) * var;

            let g = self.gamma.data()[ch];
            let b = self.beta.data()[ch];
            for ni in 0..n {
                let base = (ni * c + ch) * h * w;
                for i in 0..h * w {
                    let xh = (x[base + i] - mean) * istd;
                    x_hat.data_mut()[base + i] = xh;
                    out.data_mut()[base + i] = g * xh + b;
                }
            }
        }
        Ok((out, BatchNormCache { x_hat, inv_std }))
    }

    /// Inference-mode forward pass using the running statistics.
    pub fn forward_eval(&self, input: &Tensor) -> Result<Tensor> {
        let (n, h, w) = self.check_input(input)?;
        let c = self.channels;
        let x = input.data();
        let mut out = Tensor::zeros(input.shape());
        for ch in 0..c {
            let mean = self.running_mean.data()[ch];
            let istd = 1.0 / (self.running_var.data()[ch] + self.eps).sqrt();
            let g = self.gamma.data()[ch];
            let b = self.beta.data()[ch];
            for ni in 0..n {
                let base = (ni * c + ch) * h * w;
                for i in 0..h * w {
                    out.data_mut()[base + i] = g * (x[base + i] - mean) * istd + b;
                }
            }
        }
        Ok(out)
    }

    /// Backward pass for the training-mode forward. The input gradient folds
    /// in the dependence of the batch statistics on every element.
    pub fn backward(
        &self,
        cache: &BatchNormCache,
        grad_out: &Tensor,
    ) -> Result<(Tensor, BatchNormGrads)> {
        let (n, h, w) = self.check_input(grad_out)?;
        if grad_out.shape() != cache.x_hat.shape() {
            return Err(Error::ShapeMismatch(
                "batch norm backward: gradient shape does not match cached activations".into(),
            ));
        }
        let c = self.channels;
        let m = (n * h * w) as f64;
        let g = grad_out.data();
        let xh = cache.x_hat.data();

        let mut grad_in = Tensor::zeros(grad_out.shape());
        let mut dgamma = Tensor::zeros(&[c]);
        let mut dbeta = Tensor::zeros(&[c]);

        for ch in 0..c {
            let mut sum_g = 0.0;
            let mut sum_gx = 0.0;
            for ni in 0..n {
                let base = (ni * c + ch) * h * w;
                for i in 0..h * w {
                    sum_g += g[base + i];
                    sum_gx += g[base + i] * xh[base + i];
                }
            }
            dbeta.data_mut()[ch] = sum_g;
            dgamma.data_mut()[ch] = sum_gx;

            let scale = self.gamma.data()[ch] * cache.inv_std[ch];
            let mean_g = sum_g / m;
            let mean_gx = sum_gx / m;
            for ni in 0..n {
                let base = (ni * c + ch) * h * w;
                for i in 0..h * w {
                    grad_in.data_mut()[base + i] =
                        scale * (g[base + i] - mean_g - xh[base + i] * mean_gx);
                }
            }
        }
        Ok((grad_in, BatchNormGrads { gamma: dgamma, beta: dbeta }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::grad_check;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn param_and_state_counts() {
        let bn4 = BatchNorm::new(4);
        assert_eq!(bn4.param_count() + bn4.state_count(), 16);
        let bn8 = BatchNorm::new(8);
        assert_eq!(bn8.param_count(), 16);
        assert_eq!(bn8.state_count(), 16);
    }

    #[test]
    fn train_output_is_standardized() {
        let mut bn = BatchNorm::new(1);
        let input = Tensor::from_vec(&[1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let (out, _) = bn.forward_train(&input).unwrap();
        let mean: f64 = out.data().iter().sum::<f64>() / 4.0;
        assert_relative_eq!(mean, 0.0, epsilon = 1e-12);
        // Biased variance of the input is 1.25; output variance is shrunk by
        // the epsilon in the denominator: 1.25 / (1.25 + 1e-3).
        let var: f64 = out.data().iter().map(|v| v * v).sum::<f64>() / 4.0;
        assert_relative_eq!(var, 1.25 / (1.25 + 1e-3), epsilon = 1e-12);
    }

    #[test]
    fn running_averages_step_with_momentum() {
        let mut bn = BatchNorm::new(1);
        // Batch: mean 2.5, biased variance 1.25.
        let input = Tensor::from_vec(&[1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        bn.forward_train(&input).unwrap();
        assert_relative_eq!(bn.running_mean.data()[0], 0.99 * 0.0 + 0.01 * 2.5, epsilon = 1e-12);
        assert_relative_eq!(bn.running_var.data()[0], 0.99 * 1.0 + 0.01 * 1.25, epsilon = 1e-12);
        bn.forward_train(&input).unwrap();
        assert_relative_eq!(bn.running_mean.data()[0], 0.99 * 0.025 + 0.01 * 2.5, epsilon = 1e-12);
    }

    #[test]
    fn eval_uses_running_statistics() {
        let mut bn = BatchNorm::new(1);
        bn.running_mean.data_mut()[0] = 1.0;
        bn.running_var.data_mut()[0] = 4.0;
        let input = Tensor::from_vec(&[1, 1, 1, 2], vec![1.0, 3.0]).unwrap();
        let out = bn.forward_eval(&input).unwrap();
        assert_relative_eq!(out.data()[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(out.data()[1], 2.0 / (4.0f64 + 1e-3).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let shape = [2, 2, 3, 3];
        let n_el = 36;
        let input = Tensor::from_vec(
            &shape,
            (0..n_el).map(|_| rng.random_range(-2.0..2.0)).collect(),
        )
        .unwrap();
        let coef: Vec<f64> = (0..n_el).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut bn = BatchNorm::new(2);
        bn.gamma.data_mut().copy_from_slice(&[1.3, 0.7]);
        bn.beta.data_mut().copy_from_slice(&[0.2, -0.4]);

        let (out, cache) = bn.clone().forward_train(&input).unwrap();
        let grad_out = Tensor::from_vec(out.shape(), coef.clone()).unwrap();
        let (grad_in, grads) = bn.backward(&cache, &grad_out).unwrap();

        let bn_in = bn.clone();
        let coef_in = coef.clone();
        let err = grad_check(
            |x| {
                let t = Tensor::from_vec(&shape, x.to_vec()).unwrap();
                let (o, _) = bn_in.clone().forward_train(&t).unwrap();
                Ok(o.data().iter().zip(&coef_in).map(|(a, b)| a * b).sum())
            },
            input.data(),
            grad_in.data(),
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-6, "input grad rel err {err}");

        let analytic: Vec<f64> = grads
            .gamma
            .data()
            .iter()
            .chain(grads.beta.data())
            .copied()
            .collect();
        let packed: Vec<f64> = bn
            .gamma
            .data()
            .iter()
            .chain(bn.beta.data())
            .copied()
            .collect();
        let err = grad_check(
            |p| {
                let mut b = bn.clone();
                b.gamma.data_mut().copy_from_slice(&p[..2]);
                b.beta.data_mut().copy_from_slice(&p[2..]);
                let (o, _) = b.forward_train(&input).unwrap();
                Ok(o.data().iter().zip(&coef).map(|(a, b)| a * b).sum())
            },
            &packed,
            &analytic,
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-6, "param grad rel err {err}");
    }
}
