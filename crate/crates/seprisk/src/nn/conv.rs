use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

/// 2D convolution with a fixed 3x3 kernel, stride 1 and zero same-padding,
/// so spatial dimensions are preserved.
///
/// Input and output are `[N, C, H, W]`; weights are `[C_out, C_in, 3, 3]`.
#[derive(Debug, Clone)]
pub struct Conv2d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub weights: Tensor,
    pub bias: Tensor,
}

#[derive(Debug, Clone)]
pub struct Conv2dGrads {
    pub weights: Tensor,
    pub bias: Tensor,
}

pub const KERNEL: usize = 3;

impl Conv2d {
    pub fn new(in_channels: usize, out_channels: usize) -> Self {
        Conv2d {
            in_channels,
            out_channels,
            weights: Tensor::zeros(&[out_channels, in_channels, KERNEL, KERNEL]),
            bias: Tensor::zeros(&[out_channels]),
        }
    }

    /// Trainable parameter count: `(3*3*C_in + 1) * C_out`.
    pub fn param_count(&self) -> usize {
        (KERNEL * KERNEL * self.in_channels + 1) * self.out_channels
    }

    fn check_input(&self, input: &Tensor) -> Result<(usize, usize, usize)> {
        let s = input.shape();
        if s.len() != 4 {
            return Err(Error::ShapeMismatch(format!(
                "conv2d expects [N,C,H,W] input, got {:?}",
                s
            )));
        }
        if s[1] != self.in_channels {
            return Err(Error::ShapeMismatch(format!(
                "conv2d configured for {} input channels, got {}",
                self.in_channels, s[1]
            )));
        }
        Ok((s[0], s[2], s[3]))
    }

    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        let (n, h, w) = self.check_input(input)?;
        let ci = self.in_channels;
        let co = self.out_channels;
        let mut out = Tensor::zeros(&[n, co, h, w]);

        let x = input.data();
        let wt = self.weights.data();
        let b = self.bias.data();
        let od = out.data_mut();

        for ni in 0..n {
            for oc in 0..co {
                let out_base = (ni * co + oc) * h * w;
                let w_base = oc * ci * KERNEL * KERNEL;
                for y in 0..h {
                    for xp in 0..w {
                        let mut acc = b[oc];
                        for ic in 0..ci {
                            let in_base = (ni * ci + ic) * h * w;
                            let k_base = w_base + ic * KERNEL * KERNEL;
                            for ky in 0..KERNEL {
                                let sy = y as isize + ky as isize - 1;
                                if sy < 0 || sy >= h as isize {
                                    continue;
                                }
                                let row = in_base + sy as usize * w;
                                for kx in 0..KERNEL {
                                    let sx = xp as isize + kx as isize - 1;
                                    if sx < 0 || sx >= w as isize {
                                        continue;
                                    }
                                    acc += wt[k_base + ky * KERNEL + kx] * x[row + sx as usize];
                                }
                            }
                        }
                        od[out_base + y * w + xp] = acc;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Gradients of a scalar loss with respect to the input, weights and bias,
    /// given the loss gradient at the output.
    pub fn backward(&self, input: &Tensor, grad_out: &Tensor) -> Result<(Tensor, Conv2dGrads)> {
        let (n, h, w) = self.check_input(input)?;
        let ci = self.in_channels;
        let co = self.out_channels;
        if grad_out.shape() != [n, co, h, w] {
            return Err(Error::ShapeMismatch(format!(
                "conv2d backward: grad shape {:?} does not match output [{},{},{},{}]",
                grad_out.shape(),
                n,
                co,
                h,
                w
            )));
        }

        let mut grad_in = Tensor::zeros(input.shape());
        let mut gw = Tensor::zeros(self.weights.shape());
        let mut gb = Tensor::zeros(self.bias.shape());

        let x = input.data();
        let g = grad_out.data();
        let wt = self.weights.data();
        let gi = grad_in.data_mut();
        let gwd = gw.data_mut();
        let gbd = gb.data_mut();

        for ni in 0..n {
            for oc in 0..co {
                let out_base = (ni * co + oc) * h * w;
                let w_base = oc * ci * KERNEL * KERNEL;
                for y in 0..h {
                    for xp in 0..w {
                        let gv = g[out_base + y * w + xp];
                        if gv == 0.0 {
                            continue;
                        }
                        gbd[oc] += gv;
                        for ic in 0..ci {
                            let in_base = (ni * ci + ic) * h * w;
                            let k_base = w_base + ic * KERNEL * KERNEL;
                            for ky in 0..KERNEL {
                                let sy = y as isize + ky as isize - 1;
                                if sy < 0 || sy >= h as isize {
                                    continue;
                                }
                                let row = in_base + sy as usize * w;
                                for kx in 0..KERNEL {
                                    let sx = xp as isize + kx as isize - 1;
                                    if sx < 0 || sx >= w as isize {
                                        continue;
                                    }
                                    let k = k_base + ky * KERNEL + kx;
                                    gwd[k] += gv * x[row + sx as usize];
                                    gi[row + sx as usize] += gv * wt[k];
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok((grad_in, Conv2dGrads { weights: gw, bias: gb }))
    }
}
