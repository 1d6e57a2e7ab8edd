//! The video scoring network: a small per-frame CNN shared across frames,
//! two LSTM layers over the per-frame feature sequence, and a dense head
//! producing one pre-sigmoid scalar.
//!
//! Per frame: four blocks of (conv 3x3 + ReLU, conv 3x3 + ReLU, batch norm,
//! 3x3 max pool), then a global spatial average of the final maps gives the
//! frame's feature vector. The LSTM input width therefore equals the last
//! block's channel count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::conv::Conv2d;
use crate::nn::dense::{Activation, Dense, DenseCache};
use crate::nn::lstm::{Lstm, LstmCache};
use crate::nn::norm::{BatchNorm, BatchNormCache};
use crate::nn::pool::{pooled_extent, MaxPool, MaxPoolCache};
use crate::nn::tensor::{relu, relu_backward, sigmoid, Tensor};
use crate::video::clip::VideoClip;

pub const N_BLOCKS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VideoNetConfig {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    /// Channel counts of the two convolutions in each block.
    pub block_channels: [(usize, usize); N_BLOCKS],
    pub lstm_hidden: (usize, usize),
    pub dense_units: usize,
}

impl VideoNetConfig {
    /// Input geometry of the source study: 60 frames of 109x150 pixels.
    pub fn full_scale() -> Self {
        VideoNetConfig {
            frames: 60,
            height: 109,
            width: 150,
            block_channels: [(4, 4), (8, 8), (8, 8), (8, 8)],
            lstm_hidden: (8, 4),
            dense_units: 4,
        }
    }

    /// Small geometry for tests and examples. Channel structure is the same,
    /// so parameter counts match the full-scale network exactly.
    pub fn desk_scale() -> Self {
        VideoNetConfig { frames: 12, height: 28, width: 38, ..Self::full_scale() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 || self.height == 0 || self.width == 0 {
            return Err(Error::InvalidArgument(format!(
                "video input dims {}x{}x{} must all be positive",
                self.frames, self.height, self.width
            )));
        }
        if self.block_channels.iter().any(|&(a, b)| a == 0 || b == 0)
            || self.lstm_hidden.0 == 0
            || self.lstm_hidden.1 == 0
            || self.dense_units == 0
        {
            return Err(Error::InvalidArgument("zero-width layer in video config".into()));
        }
        let (h, w) = self.pooled_dims();
        if h == 0 || w == 0 {
            return Err(Error::InvalidArgument(format!(
                "spatial dims {}x{} collapse to zero after {} pools",
                self.height, self.width, N_BLOCKS
            )));
        }
        Ok(())
    }

    /// Spatial extent of the final feature maps after all pools.
    pub fn pooled_dims(&self) -> (usize, usize) {
        let mut h = self.height;
        let mut w = self.width;
        for _ in 0..N_BLOCKS {
            h = pooled_extent(h);
            w = pooled_extent(w);
        }
        (h, w)
    }

    /// Width of the per-frame feature vector entering the first LSTM.
    pub fn seq_dim(&self) -> usize {
        self.block_channels[N_BLOCKS - 1].1
    }
}

/// One row of the architecture summary: a parameterized layer with its
/// per-frame output shape and parameter split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerRow {
    pub name: String,
    pub output_shape: Vec<usize>,
    pub params: usize,
    pub trainable: usize,
    pub non_trainable: usize,
}

#[derive(Debug, Clone)]
pub struct VideoScore {
    pub pre_activation: f64,
    pub probability: f64,
}

#[derive(Debug, Clone)]
pub struct VideoNet {
    pub config: VideoNetConfig,
    /// Two convolutions per block, interleaved: `[b0c0, b0c1, b1c0, ...]`.
    pub convs: Vec<Conv2d>,
    pub norms: Vec<BatchNorm>,
    pub lstm1: Lstm,
    pub lstm2: Lstm,
    pub dense_hidden: Dense,
    pub dense_out: Dense,
}

struct BlockCache {
    conv1_in: Tensor,
    conv1_pre: Tensor,
    conv2_in: Tensor,
    conv2_pre: Tensor,
    bn: BatchNormCache,
    pool: MaxPoolCache,
}

/// Activations retained by the training-mode forward pass.
pub struct VideoCache {
    blocks: Vec<BlockCache>,
    gap_cells: f64,
    lstm1: LstmCache,
    lstm2: LstmCache,
    lstm2_out: Tensor,
    dense_hidden: DenseCache,
    dense_out: DenseCache,
}

impl VideoNet {
    /// Builds the network with all parameters at zero.
    pub fn new(config: VideoNetConfig) -> Result<Self> {
        config.validate()?;
        let mut convs = Vec::with_capacity(2 * N_BLOCKS);
        let mut norms = Vec::with_capacity(N_BLOCKS);
        let mut c_in = 1;
        for &(ca, cb) in &config.block_channels {
            convs.push(Conv2d::new(c_in, ca));
            convs.push(Conv2d::new(ca, cb));
            norms.push(BatchNorm::new(cb));
            c_in = cb;
        }
        let (h1, h2) = config.lstm_hidden;
        let lstm1 = Lstm::new(config.seq_dim(), h1);
        let lstm2 = Lstm::new(h1, h2);
        let dense_hidden = Dense::new(h2, config.dense_units, Activation::Relu);
        let dense_out = Dense::new(config.dense_units, 1, Activation::None);
        Ok(VideoNet { config, convs, norms, lstm1, lstm2, dense_hidden, dense_out })
    }

    /// Glorot-uniform initialization; forget-gate biases start at 1 so early
    /// training does not wash out the cell state.
    pub fn init(config: VideoNetConfig, seed: u64) -> Result<Self> {
        let mut net = Self::new(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut glorot = |t: &mut Tensor, fan_in: usize, fan_out: usize| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in t.data_mut() {
                *v = rng.random_range(-limit..limit);
            }
        };
        for conv in &mut net.convs {
            let fan_in = 9 * conv.in_channels;
            let fan_out = 9 * conv.out_channels;
            glorot(&mut conv.weights, fan_in, fan_out);
        }
        for lstm in [&mut net.lstm1, &mut net.lstm2] {
            let (d, h) = (lstm.input_dim, lstm.hidden);
            glorot(&mut lstm.w, d, h);
            glorot(&mut lstm.u, h, h);
            for j in 0..h {
                lstm.b.data_mut()[h + j] = 1.0;
            }
        }
        glorot(&mut net.dense_hidden.w, net.dense_hidden.input_dim, net.dense_hidden.units);
        glorot(&mut net.dense_out.w, net.dense_out.input_dim, net.dense_out.units);
        Ok(net)
    }

    /// (trainable, non_trainable) parameter counts.
    pub fn param_count(&self) -> (usize, usize) {
        let rows = self.layer_param_table();
        (
            rows.iter().map(|r| r.trainable).sum(),
            rows.iter().map(|r| r.non_trainable).sum(),
        )
    }

    /// Architecture summary listing every parameterized layer in forward
    /// order with its per-frame output shape.
    pub fn layer_param_table(&self) -> Vec<LayerRow> {
        let t = self.config.frames;
        let mut rows = Vec::new();
        let mut h = self.config.height;
        let mut w = self.config.width;
        for (b, &(ca, cb)) in self.config.block_channels.iter().enumerate() {
            let conv1 = &self.convs[2 * b];
            let conv2 = &self.convs[2 * b + 1];
            let norm = &self.norms[b];
            rows.push(LayerRow {
                name: format!("block{}_conv1", b + 1),
                output_shape: vec![t, ca, h, w],
                params: conv1.param_count(),
                trainable: conv1.param_count(),
                non_trainable: 0,
            });
            rows.push(LayerRow {
                name: format!("block{}_conv2", b + 1),
                output_shape: vec![t, cb, h, w],
                params: conv2.param_count(),
                trainable: conv2.param_count(),
                non_trainable: 0,
            });
            rows.push(LayerRow {
                name: format!("block{}_norm", b + 1),
                output_shape: vec![t, cb, h, w],
                params: norm.param_count() + norm.state_count(),
                trainable: norm.param_count(),
                non_trainable: norm.state_count(),
            });
            h = pooled_extent(h);
            w = pooled_extent(w);
        }
        rows.push(LayerRow {
            name: "lstm1".into(),
            output_shape: vec![t, self.lstm1.hidden],
            params: self.lstm1.param_count(),
            trainable: self.lstm1.param_count(),
            non_trainable: 0,
        });
        rows.push(LayerRow {
            name: "lstm2".into(),
            output_shape: vec![t, self.lstm2.hidden],
            params: self.lstm2.param_count(),
            trainable: self.lstm2.param_count(),
            non_trainable: 0,
        });
        rows.push(LayerRow {
            name: "dense".into(),
            output_shape: vec![self.dense_hidden.units],
            params: self.dense_hidden.param_count(),
            trainable: self.dense_hidden.param_count(),
            non_trainable: 0,
        });
        rows.push(LayerRow {
            name: "output".into(),
            output_shape: vec![1],
            params: self.dense_out.param_count(),
            trainable: self.dense_out.param_count(),
            non_trainable: 0,
        });
        rows
    }

    pub fn n_trainable(&self) -> usize {
        self.param_count().0
    }

    /// Trainable parameters flattened in layer-table order.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_trainable());
        for b in 0..N_BLOCKS {
            for conv in &self.convs[2 * b..2 * b + 2] {
                out.extend_from_slice(conv.weights.data());
                out.extend_from_slice(conv.bias.data());
            }
            out.extend_from_slice(self.norms[b].gamma.data());
            out.extend_from_slice(self.norms[b].beta.data());
        }
        out.extend(self.lstm1.params_flat());
        out.extend(self.lstm2.params_flat());
        out.extend(self.dense_hidden.params_flat());
        out.extend(self.dense_out.params_flat());
        out
    }

    pub fn set_params_flat(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.n_trainable() {
            return Err(Error::ShapeMismatch(format!(
                "video net expects {} parameters, got {}",
                self.n_trainable(),
                p.len()
            )));
        }
        let mut at = 0;
        let mut take = |n: usize| {
            let s = &p[at..at + n];
            at += n;
            s
        };
        for b in 0..N_BLOCKS {
            for conv in self.convs[2 * b..2 * b + 2].iter_mut() {
                let nw = conv.weights.len();
                conv.weights.data_mut().copy_from_slice(take(nw));
                let nb = conv.bias.len();
                conv.bias.data_mut().copy_from_slice(take(nb));
            }
            let c = self.norms[b].channels;
            self.norms[b].gamma.data_mut().copy_from_slice(take(c));
            self.norms[b].beta.data_mut().copy_from_slice(take(c));
        }
        let n1 = self.lstm1.param_count();
        self.lstm1.set_params_flat(take(n1))?;
        let n2 = self.lstm2.param_count();
        self.lstm2.set_params_flat(take(n2))?;
        let nd = self.dense_hidden.param_count();
        self.dense_hidden.set_params_flat(take(nd))?;
        let no = self.dense_out.param_count();
        self.dense_out.set_params_flat(take(no))?;
        Ok(())
    }

    fn check_clip(&self, clip: &VideoClip) -> Result<Tensor> {
        let (t, h, w) = clip.dims();
        if (t, h, w) != (self.config.frames, self.config.height, self.config.width) {
            return Err(Error::ShapeMismatch(format!(
                "clip dims {}x{}x{} do not match config {}x{}x{}",
                t, h, w, self.config.frames, self.config.height, self.config.width
            )));
        }
        clip.frames.clone().reshape(&[t, 1, h, w])
    }

    /// Global spatial average of `[T, C, h, w]` maps into a `[T, C]`
    /// sequence.
    fn global_average(maps: &Tensor) -> Result<Tensor> {
        let s = maps.shape().to_vec();
        let (t, c, hw) = (s[0], s[1], s[2] * s[3]);
        let mut seq = Tensor::zeros(&[t, c]);
        for ti in 0..t {
            for ci in 0..c {
                let base = (ti * c + ci) * hw;
                let sum: f64 = maps.data()[base..base + hw].iter().sum();
                seq.data_mut()[ti * c + ci] = sum / hw as f64;
            }
        }
        Ok(seq)
    }

    /// Training-mode forward pass over one clip. Batch-norm statistics are
    /// computed over the clip's own frames and the running averages advance.
    pub fn forward_train(&mut self, clip: &VideoClip) -> Result<(f64, VideoCache)> {
        let mut x = self.check_clip(clip)?;
        let mut blocks = Vec::with_capacity(N_BLOCKS);
        for b in 0..N_BLOCKS {
            let conv1_in = x;
            let conv1_pre = self.convs[2 * b].forward(&conv1_in)?;
            let conv2_in = relu(&conv1_pre);
            let conv2_pre = self.convs[2 * b + 1].forward(&conv2_in)?;
            let act = relu(&conv2_pre);
            let (normed, bn) = self.norms[b].forward_train(&act)?;
            let (pooled, pool) = MaxPool::forward(&normed)?;
            blocks.push(BlockCache { conv1_in, conv1_pre, conv2_in, conv2_pre, bn, pool });
            x = pooled;
        }
        let gap_cells = (x.shape()[2] * x.shape()[3]) as f64;
        let seq = Self::global_average(&x)?;
        let (h1, lstm1) = self.lstm1.forward(&seq)?;
        let (h2, lstm2) = self.lstm2.forward(&h1)?;
        let t = self.config.frames;
        let hid = self.lstm2.hidden;
        let last = h2.data()[(t - 1) * hid..t * hid].to_vec();
        let (d1, dense_hidden) = self.dense_hidden.forward(&last)?;
        let (d2, dense_out) = self.dense_out.forward(&d1)?;
        let pre = d2[0];
        Ok((
            pre,
            VideoCache {
                blocks,
                gap_cells,
                lstm1,
                lstm2,
                lstm2_out: h2,
                dense_hidden,
                dense_out,
            },
        ))
    }

    /// Inference-mode forward pass using the stored running statistics.
    pub fn forward_eval(&self, clip: &VideoClip) -> Result<f64> {
        let mut x = self.check_clip(clip)?;
        for b in 0..N_BLOCKS {
            let a = relu(&self.convs[2 * b].forward(&x)?);
            let a = relu(&self.convs[2 * b + 1].forward(&a)?);
            let a = self.norms[b].forward_eval(&a)?;
            x = MaxPool::forward(&a)?.0;
        }
        let seq = Self::global_average(&x)?;
        let (h1, _) = self.lstm1.forward(&seq)?;
        let (h2, _) = self.lstm2.forward(&h1)?;
        let t = self.config.frames;
        let hid = self.lstm2.hidden;
        let (d1, _) = self.dense_hidden.forward(&h2.data()[(t - 1) * hid..t * hid])?;
        let (d2, _) = self.dense_out.forward(&d1)?;
        Ok(d2[0])
    }

    pub fn score(&self, clip: &VideoClip) -> Result<VideoScore> {
        let pre = self.forward_eval(clip)?;
        Ok(VideoScore { pre_activation: pre, probability: sigmoid(pre) })
    }

    /// Backward pass for a training-mode forward; `d_pre` is the loss
    /// gradient at the pre-sigmoid output. Returns flat gradients aligned
    /// with `params_flat`.
    pub fn backward(&self, cache: &VideoCache, d_pre: f64) -> Result<Vec<f64>> {
        let (g_d1, grads_out) = self.dense_out.backward(&cache.dense_out, &[d_pre])?;
        let (g_last, grads_hidden) = self.dense_hidden.backward(&cache.dense_hidden, &g_d1)?;

        let t = self.config.frames;
        let hid = self.lstm2.hidden;
        let mut g_h2 = Tensor::zeros(cache.lstm2_out.shape());
        g_h2.data_mut()[(t - 1) * hid..t * hid].copy_from_slice(&g_last);
        let (g_h1, grads_lstm2) = self.lstm2.backward(&cache.lstm2, &g_h2)?;
        let (g_seq, grads_lstm1) = self.lstm1.backward(&cache.lstm1, &g_h1)?;

        // Un-average: each spatial cell of the final maps shares the frame
        // gradient equally.
        let pooled_shape = {
            let s = g_seq.shape();
            let (ph, pw) = self.config.pooled_dims();
            vec![s[0], s[1], ph, pw]
        };
        let mut g_maps = Tensor::zeros(&pooled_shape);
        {
            let cells = cache.gap_cells;
            let c = pooled_shape[1];
            let hw = pooled_shape[2] * pooled_shape[3];
            for ti in 0..t {
                for ci in 0..c {
                    let g = g_seq.data()[ti * c + ci] / cells;
                    let base = (ti * c + ci) * hw;
                    for i in 0..hw {
                        g_maps.data_mut()[base + i] = g;
                    }
                }
            }
        }

        let mut conv_grads = Vec::with_capacity(2 * N_BLOCKS);
        let mut norm_grads = Vec::with_capacity(N_BLOCKS);
        let mut g = g_maps;
        for b in (0..N_BLOCKS).rev() {
            let blk = &cache.blocks[b];
            let g_normed = MaxPool::backward(&blk.pool, &g)?;
            let (g_act, bn_g) = self.norms[b].backward(&blk.bn, &g_normed)?;
            let g_pre2 = relu_backward(&blk.conv2_pre, &g_act);
            let (g_mid, c2_g) = self.convs[2 * b + 1].backward(&blk.conv2_in, &g_pre2)?;
            let g_pre1 = relu_backward(&blk.conv1_pre, &g_mid);
            let (g_in, c1_g) = self.convs[2 * b].backward(&blk.conv1_in, &g_pre1)?;
            norm_grads.push(bn_g);
            conv_grads.push(c2_g);
            conv_grads.push(c1_g);
            g = g_in;
        }
        conv_grads.reverse();
        norm_grads.reverse();

        let mut flat = Vec::with_capacity(self.n_trainable());
        for b in 0..N_BLOCKS {
            for cg in &conv_grads[2 * b..2 * b + 2] {
                flat.extend_from_slice(cg.weights.data());
                flat.extend_from_slice(cg.bias.data());
            }
            flat.extend_from_slice(norm_grads[b].gamma.data());
            flat.extend_from_slice(norm_grads[b].beta.data());
        }
        for lg in [&grads_lstm1, &grads_lstm2] {
            flat.extend_from_slice(lg.w.data());
            flat.extend_from_slice(lg.u.data());
            flat.extend_from_slice(lg.b.data());
        }
        for dg in [&grads_hidden, &grads_out] {
            flat.extend_from_slice(dg.w.data());
            flat.extend_from_slice(dg.b.data());
        }
        Ok(flat)
    }
}
