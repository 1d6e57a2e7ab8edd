use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

/// Single-layer LSTM over a `[T, D]` sequence, producing the full `[T, H]`
/// hidden sequence. Initial hidden and cell states are zero.
///
/// Gates are stacked along the first weight axis in the order input, forget,
/// cell candidate, output. Parameter count is `4*((D+H)*H + H)`.
#[derive(Debug, Clone)]
pub struct Lstm {
    pub input_dim: usize,
    pub hidden: usize,
    /// Input weights, `[4H, D]`.
    pub w: Tensor,
    /// Recurrent weights, `[4H, H]`.
    pub u: Tensor,
    /// Gate biases, `[4H]`.
    pub b: Tensor,
}

#[derive(Debug, Clone)]
pub struct LstmGrads {
    pub w: Tensor,
    pub u: Tensor,
    pub b: Tensor,
}

/// Per-step activations retained for backpropagation through time.
#[derive(Debug, Clone)]
pub struct LstmCache {
    steps: usize,
    /// Gate activations per step, `[T, 4H]`, post-nonlinearity.
    gates: Vec<f64>,
    /// Cell states per step, `[T, H]`.
    cells: Vec<f64>,
    /// Hidden states per step, `[T, H]`.
    hidden_seq: Vec<f64>,
    /// Input copy, `[T, D]`.
    inputs: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    crate::nn::tensor::sigmoid(x)
}

impl Lstm {
    pub fn new(input_dim: usize, hidden: usize) -> Self {
        Lstm {
            input_dim,
            hidden,
            w: Tensor::zeros(&[4 * hidden, input_dim]),
            u: Tensor::zeros(&[4 * hidden, hidden]),
            b: Tensor::zeros(&[4 * hidden]),
        }
    }

    pub fn param_count(&self) -> usize {
        4 * ((self.input_dim + self.hidden) * self.hidden + self.hidden)
    }

    fn check_input(&self, input: &Tensor) -> Result<usize> {
        let s = input.shape();
        if s.len() != 2 || s[1] != self.input_dim {
            return Err(Error::ShapeMismatch(format!(
                "lstm expects [T,{}] input, got {:?}",
                self.input_dim, s
            )));
        }
        if s[0] == 0 {
            return Err(Error::EmptyInput("lstm over empty sequence".into()));
        }
        Ok(s[0])
    }

    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, LstmCache)> {
        let t_len = self.check_input(input)?;
        let d = self.input_dim;
        let h = self.hidden;
        let x = input.data();
        let w = self.w.data();
        let u = self.u.data();
        let b = self.b.data();

        let mut gates = vec![0.0; t_len * 4 * h];
        let mut cells = vec![0.0; t_len * h];
        let mut hidden_seq = vec![0.0; t_len * h];

        let mut h_prev = vec![0.0; h];
        let mut c_prev = vec![0.0; h];

        for t in 0..t_len {
            let xt = &x[t * d..(t + 1) * d];
            let g_base = t * 4 * h;
            // Pre-activations for all 4H gate units.
            for row in 0..4 * h {
                let mut acc = b[row];
                let wr = &w[row * d..(row + 1) * d];
                for j in 0..d {
                    acc += wr[j] * xt[j];
                }
                let ur = &u[row * h..(row + 1) * h];
                for j in 0..h {
                    acc += ur[j] * h_prev[j];
                }
                gates[g_base + row] = acc;
            }
            for j in 0..h {
                let i_g = sigmoid(gates[g_base + j]);
                let f_g = sigmoid(gates[g_base + h + j]);
                let g_g = gates[g_base + 2 * h + j].tanh();
                let o_g = sigmoid(gates[g_base + 3 * h + j]);
                gates[g_base + j] = i_g;
                gates[g_base + h + j] = f_g;
                gates[g_base + 2 * h + j] = g_g;
                gates[g_base + 3 * h + j] = o_g;

                let c = f_g * c_prev[j] + i_g * g_g;
                cells[t * h + j] = c;
                hidden_seq[t * h + j] = o_g * c.tanh();
            }
            h_prev.copy_from_slice(&hidden_seq[t * h..(t + 1) * h]);
            c_prev.copy_from_slice(&cells[t * h..(t + 1) * h]);
        }

        let out = Tensor::from_vec(&[t_len, h], hidden_seq.clone())?;
        Ok((
            out,
            LstmCache { steps: t_len, gates, cells, hidden_seq, inputs: x.to_vec() },
        ))
    }

    /// Backpropagation through time. `grad_out` is the loss gradient with
    /// respect to the full hidden sequence `[T, H]`.
    pub fn backward(&self, cache: &LstmCache, grad_out: &Tensor) -> Result<(Tensor, LstmGrads)> {
        let t_len = cache.steps;
        let d = self.input_dim;
        let h = self.hidden;
        if grad_out.shape() != [t_len, h] {
            return Err(Error::ShapeMismatch(format!(
                "lstm backward: gradient shape {:?} does not match [{}, {}]",
                grad_out.shape(),
                t_len,
                h
            )));
        }
        let g_out = grad_out.data();
        let w = self.w.data();
        let u = self.u.data();

        let mut grad_in = Tensor::zeros(&[t_len, d]);
        let mut gw = Tensor::zeros(self.w.shape());
        let mut gu = Tensor::zeros(self.u.shape());
        let mut gb = Tensor::zeros(self.b.shape());

        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut da = vec![0.0; 4 * h];

        for t in (0..t_len).rev() {
            let g_base = t * 4 * h;
            for j in 0..h {
                let i_g = cache.gates[g_base + j];
                let f_g = cache.gates[g_base + h + j];
                let g_g = cache.gates[g_base + 2 * h + j];
                let o_g = cache.gates[g_base + 3 * h + j];
                let c_t = cache.cells[t * h + j];
                let c_prev = if t == 0 { 0.0 } else { cache.cells[(t - 1) * h + j] };
                let tanh_c = c_t.tanh();

                let dh = g_out[t * h + j] + dh_next[j];
                let dc = dc_next[j] + dh * o_g * (1.0 - tanh_c * tanh_c);

                da[j] = dc * g_g * i_g * (1.0 - i_g);
                da[h + j] = dc * c_prev * f_g * (1.0 - f_g);
                da[2 * h + j] = dc * i_g * (1.0 - g_g * g_g);
                da[3 * h + j] = dh * tanh_c * o_g * (1.0 - o_g);

                dc_next[j] = dc * f_g;
            }

            let xt = &cache.inputs[t * d..(t + 1) * d];
            let gwd = gw.data_mut();
            let gud = gu.data_mut();
            let gbd = gb.data_mut();
            for row in 0..4 * h {
                let a = da[row];
                gbd[row] += a;
                for j in 0..d {
                    gwd[row * d + j] += a * xt[j];
                }
                if t > 0 {
                    let hp = &cache.hidden_seq[(t - 1) * h..t * h];
                    for j in 0..h {
                        gud[row * h + j] += a * hp[j];
                    }
                }
            }

            let gid = grad_in.data_mut();
            for j in 0..d {
                let mut acc = 0.0;
                for row in 0..4 * h {
                    acc += w[row * d + j] * da[row];
                }
                gid[t * d + j] = acc;
            }
            for j in 0..h {
                let mut acc = 0.0;
                for row in 0..4 * h {
                    acc += u[row * h + j] * da[row];
                }
                dh_next[j] = acc;
            }
        }
        Ok((grad_in, LstmGrads { w: gw, u: gu, b: gb }))
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        out.extend_from_slice(self.w.data());
        out.extend_from_slice(self.u.data());
        out.extend_from_slice(self.b.data());
        out
    }

    pub fn set_params_flat(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.param_count() {
            return Err(Error::ShapeMismatch(format!(
                "lstm expects {} parameters, got {}",
                self.param_count(),
                p.len()
            )));
        }
        let nw = self.w.len();
        let nu = self.u.len();
        self.w.data_mut().copy_from_slice(&p[..nw]);
        self.u.data_mut().copy_from_slice(&p[nw..nw + nu]);
        self.b.data_mut().copy_from_slice(&p[nw + nu..]);
        Ok(())
    }
}
