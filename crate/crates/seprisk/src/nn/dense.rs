use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;
use crate::nn::tensor::sigmoid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    None,
    Relu,
    Sigmoid,
}

/// Fully connected layer on a single feature vector: `act(W x + b)` with
/// weights `[units, D]`. Parameter count is `(D + 1) * units`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub input_dim: usize,
    pub units: usize,
    pub activation: Activation,
    pub w: Tensor,
    pub b: Tensor,
}

#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub w: Tensor,
    pub b: Tensor,
}

#[derive(Debug, Clone)]
pub struct DenseCache {
    input: Vec<f64>,
    pre: Vec<f64>,
}

impl Dense {
    pub fn new(input_dim: usize, units: usize, activation: Activation) -> Self {
        Dense {
            input_dim,
            units,
            activation,
            w: Tensor::zeros(&[units, input_dim]),
            b: Tensor::zeros(&[units]),
        }
    }

    pub fn param_count(&self) -> usize {
        (self.input_dim + 1) * self.units
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, DenseCache)> {
        if input.len() != self.input_dim {
            return Err(Error::ShapeMismatch(format!(
                "dense expects {} inputs, got {}",
                self.input_dim,
                input.len()
            )));
        }
        let w = self.w.data();
        let b = self.b.data();
        let mut pre = vec![0.0; self.units];
        for u in 0..self.units {
            let wr = &w[u * self.input_dim..(u + 1) * self.input_dim];
            let mut acc = b[u];
            for j in 0..self.input_dim {
                acc += wr[j] * input[j];
            }
            pre[u] = acc;
        }
        let out = pre
            .iter()
            .map(|&z| match self.activation {
                Activation::None => z,
                Activation::Relu => z.max(0.0),
                Activation::Sigmoid => sigmoid(z),
            })
            .collect();
        Ok((out, DenseCache { input: input.to_vec(), pre }))
    }

    pub fn backward(&self, cache: &DenseCache, grad_out: &[f64]) -> Result<(Vec<f64>, DenseGrads)> {
        if grad_out.len() != self.units {
            return Err(Error::ShapeMismatch(format!(
                "dense backward: expected {} gradients, got {}",
                self.units,
                grad_out.len()
            )));
        }
        let w = self.w.data();
        let mut gw = Tensor::zeros(self.w.shape());
        let mut gb = Tensor::zeros(self.b.shape());
        let mut grad_in = vec![0.0; self.input_dim];

        for u in 0..self.units {
            let dact = match self.activation {
                Activation::None => 1.0,
                Activation::Relu => {
                    if cache.pre[u] > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
                Activation::Sigmoid => {
                    let y = sigmoid(cache.pre[u]);
                    y * (1.0 - y)
                }
            };
            let dz = grad_out[u] * dact;
            gb.data_mut()[u] = dz;
            let gwr = &mut gw.data_mut()[u * self.input_dim..(u + 1) * self.input_dim];
            let wr = &w[u * self.input_dim..(u + 1) * self.input_dim];
            for j in 0..self.input_dim {
                gwr[j] = dz * cache.input[j];
                grad_in[j] += dz * wr[j];
            }
        }
        Ok((grad_in, DenseGrads { w: gw, b: gb }))
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        out.extend_from_slice(self.w.data());
        out.extend_from_slice(self.b.data());
        out
    }

    pub fn set_params_flat(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.param_count() {
            return Err(Error::ShapeMismatch(format!(
                "dense expects {} parameters, got {}",
                self.param_count(),
                p.len()
            )));
        }
        let nw = self.w.len();
        self.w.data_mut().copy_from_slice(&p[..nw]);
        self.b.data_mut().copy_from_slice(&p[nw..]);
        Ok(())
    }
}
