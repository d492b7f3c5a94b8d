//! Standard LSTM cell (input, forget and output gates plus a tanh
//! candidate; no peepholes, no projection) with its backward pass.
//!
//! The four gate blocks are stacked row-wise in the order
//! input, forget, output, candidate, so `w` is `[4·D_h, D_in]`,
//! `u` is `[4·D_h, D_h]` and `b` is `[4·D_h]`.

use crate::error::Result;
use crate::numeric::rng::init_uniform;
use crate::numeric::tensor::{matvec_acc, matvec_t_acc, outer_acc};
use crate::numeric::{sigmoid, ParamSet, Rng, Tensor};

pub const GATES: usize = 4;

/// Owned weights for one LSTM direction. Also used to hold gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams {
    pub w: Tensor,
    pub u: Tensor,
    pub b: Tensor,
}

impl LstmParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        LstmParams {
            w: Tensor::zeros(&[GATES * hidden, input_dim]),
            u: Tensor::zeros(&[GATES * hidden, hidden]),
            b: Tensor::zeros(&[GATES * hidden]),
        }
    }

    /// Glorot-uniform per gate block, forget-gate bias 1, other biases 0.
    pub fn init(input_dim: usize, hidden: usize, rng: &mut Rng) -> Result<Self> {
        let mut p = Self::zeros(input_dim, hidden);
        for gate in 0..GATES {
            let wg = init_uniform(&[hidden, input_dim], input_dim, rng)?;
            p.w.data_mut()[gate * hidden * input_dim..(gate + 1) * hidden * input_dim]
                .copy_from_slice(wg.data());
            let ug = init_uniform(&[hidden, hidden], hidden, rng)?;
            p.u.data_mut()[gate * hidden * hidden..(gate + 1) * hidden * hidden]
                .copy_from_slice(ug.data());
        }
        p.b.data_mut()[hidden..2 * hidden].fill(1.0);
        Ok(p)
    }

    pub fn view(&self) -> LstmWeights<'_> {
        LstmWeights {
            w: &self.w,
            u: &self.u,
            b: &self.b,
        }
    }

    pub fn hidden(&self) -> usize {
        self.u.cols()
    }

    pub fn insert_into(self, set: &mut ParamSet, prefix: &str) {
        set.insert(format!("{prefix}.w"), self.w);
        set.insert(format!("{prefix}.u"), self.u);
        set.insert(format!("{prefix}.b"), self.b);
    }
}

/// Borrowed weights for one LSTM direction.
#[derive(Clone, Copy, Debug)]
pub struct LstmWeights<'a> {
    pub w: &'a Tensor,
    pub u: &'a Tensor,
    pub b: &'a Tensor,
}

impl<'a> LstmWeights<'a> {
    pub fn from_set(set: &'a ParamSet, prefix: &str) -> Result<Self> {
        Ok(LstmWeights {
            w: set.get(&format!("{prefix}.w"))?,
            u: set.get(&format!("{prefix}.u"))?,
            b: set.get(&format!("{prefix}.b"))?,
        })
    }

    pub fn hidden(&self) -> usize {
        self.u.cols()
    }

    pub fn input_dim(&self) -> usize {
        self.w.cols()
    }
}

/// Everything one cell application needs for its backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct CellCache {
    pub h_prev: Vec<f64>,
    pub s_prev: Vec<f64>,
    /// Activated gates `[i | f | o | c̃]`.
    pub gates: Vec<f64>,
    pub s: Vec<f64>,
    pub tanh_s: Vec<f64>,
    pub h: Vec<f64>,
}

impl CellCache {
    pub fn input_gate(&self) -> &[f64] {
        &self.gates[..self.h.len()]
    }

    pub fn forget_gate(&self) -> &[f64] {
        let d = self.h.len();
        &self.gates[d..2 * d]
    }

    pub fn output_gate(&self) -> &[f64] {
        let d = self.h.len();
        &self.gates[2 * d..3 * d]
    }

    pub fn candidate(&self) -> &[f64] {
        let d = self.h.len();
        &self.gates[3 * d..]
    }
}

/// One LSTM step: `h, s = lstm(u, h_prev, s_prev)`.
pub fn lstm_cell(input: &[f64], h_prev: &[f64], s_prev: &[f64], p: LstmWeights<'_>) -> CellCache {
    let d = p.hidden();
    let mut z = p.b.data().to_vec();
    matvec_acc(p.w, input, &mut z);
    matvec_acc(p.u, h_prev, &mut z);
    for v in &mut z[..3 * d] {
        *v = sigmoid(*v);
    }
    for v in &mut z[3 * d..] {
        *v = v.tanh();
    }
    let (i, rest) = z.split_at(d);
    let (f, rest) = rest.split_at(d);
    let (o, g) = rest.split_at(d);
    let s: Vec<f64> = (0..d).map(|k| f[k] * s_prev[k] + i[k] * g[k]).collect();
    let tanh_s: Vec<f64> = s.iter().map(|v| v.tanh()).collect();
    let h: Vec<f64> = (0..d).map(|k| o[k] * tanh_s[k]).collect();
    CellCache {
        h_prev: h_prev.to_vec(),
        s_prev: s_prev.to_vec(),
        gates: z,
        s,
        tanh_s,
        h,
    }
}

/// Backward through one step given upstream `dh` and `ds`. Accumulates
/// weight gradients into `grads` and returns `(dh_prev, ds_prev)`.
pub fn lstm_cell_backward(
    cache: &CellCache,
    input: &[f64],
    dh: &[f64],
    ds: &[f64],
    p: LstmWeights<'_>,
    grads: &mut LstmParams,
) -> (Vec<f64>, Vec<f64>) {
    let d = cache.h.len();
    let (i, f, o, g) = (
        cache.input_gate(),
        cache.forget_gate(),
        cache.output_gate(),
        cache.candidate(),
    );
    let mut dz = vec![0.0; GATES * d];
    let mut ds_prev = vec![0.0; d];
    for k in 0..d {
        let ts = cache.tanh_s[k];
        let ds_total = ds[k] + dh[k] * o[k] * (1.0 - ts * ts);
        dz[k] = ds_total * g[k] * i[k] * (1.0 - i[k]);
        dz[d + k] = ds_total * cache.s_prev[k] * f[k] * (1.0 - f[k]);
        dz[2 * d + k] = dh[k] * ts * o[k] * (1.0 - o[k]);
        dz[3 * d + k] = ds_total * i[k] * (1.0 - g[k] * g[k]);
        ds_prev[k] = ds_total * f[k];
    }
    outer_acc(&mut grads.w, &dz, input);
    outer_acc(&mut grads.u, &dz, &cache.h_prev);
    for (b, z) in grads.b.data_mut().iter_mut().zip(&dz) {
        *b += z;
    }
    let mut dh_prev = vec![0.0; d];
    matvec_t_acc(p.u, &dz, &mut dh_prev);
    (dh_prev, ds_prev)
}

/// Runs the cell over `inputs` in the given order from zero initial state.
pub fn run_sequence(inputs: &[&[f64]], p: LstmWeights<'_>) -> Vec<CellCache> {
    let d = p.hidden();
    let mut h = vec![0.0; d];
    let mut s = vec![0.0; d];
    let mut out = Vec::with_capacity(inputs.len());
    for x in inputs {
        let cache = lstm_cell(x, &h, &s, p);
        h.clone_from(&cache.h);
        s.clone_from(&cache.s);
        out.push(cache);
    }
    out
}

/// Backpropagation through time. `dh_out[t]` is the external gradient on
/// the output of step `t` (same order as `inputs`).
pub fn sequence_backward(
    caches: &[CellCache],
    inputs: &[&[f64]],
    dh_out: &[Vec<f64>],
    p: LstmWeights<'_>,
    grads: &mut LstmParams,
) {
    let d = p.hidden();
    let mut dh_carry = vec![0.0; d];
    let mut ds_carry = vec![0.0; d];
    for t in (0..caches.len()).rev() {
        let dh: Vec<f64> = dh_out[t]
            .iter()
            .zip(&dh_carry)
            .map(|(a, b)| a + b)
            .collect();
        let (dh_prev, ds_prev) =
            lstm_cell_backward(&caches[t], inputs[t], &dh, &ds_carry, p, grads);
        dh_carry = dh_prev;
        ds_carry = ds_prev;
    }
}
