use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

/// 3x3 max pooling with stride 3 and ceil-mode output sizing, so a partial
/// window at the right or bottom edge still produces an output element.
///
/// The backward pass routes the gradient to the first maximal element of each
/// window in row-major scan order.
#[derive(Debug, Clone)]
pub struct MaxPool;

#[derive(Debug, Clone)]
pub struct MaxPoolCache {
    in_shape: Vec<usize>,
    argmax: Vec<usize>,
}

pub const WINDOW: usize = 3;
pub const STRIDE: usize = 3;

/// Output spatial size for an input extent: `ceil(extent / 3)`.
pub fn pooled_extent(extent: usize) -> usize {
    extent.div_ceil(STRIDE)
}

impl MaxPool {
    pub fn forward(input: &Tensor) -> Result<(Tensor, MaxPoolCache)> {
        let s = input.shape();
        if s.len() != 4 {
            return Err(Error::ShapeMismatch(format!(
                "max pool expects [N,C,H,W] input, got {:?}",
                s
            )));
        }
        let (n, c, h, w) = (s[0], s[1], s[2], s[3]);
        if h == 0 || w == 0 {
            return Err(Error::EmptyInput("max pool over empty spatial extent".into()));
        }
        let oh = pooled_extent(h);
        let ow = pooled_extent(w);
        let mut out = Tensor::zeros(&[n, c, oh, ow]);
        let mut argmax = vec![0usize; n * c * oh * ow];
        let x = input.data();
        let od = out.data_mut();

        for ni in 0..n {
            for ch in 0..c {
                let in_base = (ni * c + ch) * h * w;
                let out_base = (ni * c + ch) * oh * ow;
                for oy in 0..oh {
                    for ox in 0..ow {
                        let y0 = oy * STRIDE;
                        let x0 = ox * STRIDE;
                        let y1 = (y0 + WINDOW).min(h);
                        let x1 = (x0 + WINDOW).min(w);
                        let mut best = f64::NEG_INFINITY;
                        let mut best_idx = in_base + y0 * w + x0;
                        for y in y0..y1 {
                            for xp in x0..x1 {
                                let idx = in_base + y * w + xp;
                                if x[idx] > best {
                                    best = x[idx];
                                    best_idx = idx;
                                }
                            }
                        }
                        od[out_base + oy * ow + ox] = best;
                        argmax[out_base + oy * ow + ox] = best_idx;
                    }
                }
            }
        }
        Ok((out, MaxPoolCache { in_shape: s.to_vec(), argmax }))
    }

    pub fn backward(cache: &MaxPoolCache, grad_out: &Tensor) -> Result<Tensor> {
        if grad_out.len() != cache.argmax.len() {
            return Err(Error::ShapeMismatch(
                "max pool backward: gradient does not match cached output size".into(),
            ));
        }
        let mut grad_in = Tensor::zeros(&cache.in_shape);
        let gi = grad_in.data_mut();
        for (g, &idx) in grad_out.data().iter().zip(&cache.argmax) {
            gi[idx] += g;
        }
        Ok(grad_in)
    }
}
