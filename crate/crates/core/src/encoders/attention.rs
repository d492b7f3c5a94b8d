//! Attentive context encoder.
//!
//! Each side is read by a bi-directional LSTM. Every position's output
//! `H_i = [h→_i; h←_i]` is scored by a two-layer feed-forward net,
//! `logit_i = W_a · tanh(W_e · H_i)`, and the scores of both sides are
//! normalized jointly so the `2C` attentions sum to one. The context vector
//! is the attention-weighted sum of all `H_i`.

use crate::error::Result;
use crate::numeric::tensor::{dot, matvec_acc, matvec_t_acc, outer_acc};
use crate::numeric::{ParamSet, Tensor};

use super::lstm::{run_sequence, sequence_backward, CellCache, LstmParams, LstmWeights};

#[derive(Clone, Copy, Debug)]
pub struct AttentionWeights<'a> {
    /// `[D_a, 2·D_h]`
    pub w_e: &'a Tensor,
    /// `[1, D_a]`
    pub w_a: &'a Tensor,
}

impl<'a> AttentionWeights<'a> {
    pub fn from_set(set: &'a ParamSet) -> Result<Self> {
        Ok(AttentionWeights {
            w_e: set.get(super::names::W_E)?,
            w_a: set.get(super::names::W_A)?,
        })
    }
}

/// Attention for one instance.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionScores {
    /// Hidden layer `e_i`, left positions first.
    pub hidden: Vec<Vec<f64>>,
    /// `W_a · e_i`, left positions first.
    pub logits: Vec<f64>,
    /// Normalized attentions, left positions first.
    pub weights: Vec<f64>,
    /// Number of left positions.
    pub split: usize,
}

impl AttentionScores {
    /// `a^l_1 .. a^l_C`
    pub fn left(&self) -> &[f64] {
        &self.weights[..self.split]
    }

    /// `a^r_1 .. a^r_C`
    pub fn right(&self) -> &[f64] {
        &self.weights[self.split..]
    }
}

/// `exp(x_i) / Σ_j exp(x_j)`, computed after subtracting the maximum.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Scores every bi-LSTM output of both sides and normalizes jointly.
pub fn attention_scores(
    outputs_left: &[Vec<f64>],
    outputs_right: &[Vec<f64>],
    p: AttentionWeights<'_>,
) -> AttentionScores {
    let d_a = p.w_e.rows();
    let mut hidden = Vec::with_capacity(outputs_left.len() + outputs_right.len());
    let mut logits = Vec::with_capacity(hidden.capacity());
    for h in outputs_left.iter().chain(outputs_right) {
        let mut e = vec![0.0; d_a];
        matvec_acc(p.w_e, h, &mut e);
        e.iter_mut().for_each(|v| *v = v.tanh());
        logits.push(dot(p.w_a.data(), &e));
        hidden.push(e);
    }
    AttentionScores {
        weights: softmax(&logits),
        hidden,
        logits,
        split: outputs_left.len(),
    }
}

/// Per-direction caches for both sides.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentiveTrace {
    /// Reads `l_1 .. l_C`.
    pub left_fwd: Vec<CellCache>,
    /// Reads `l_C .. l_1`.
    pub left_bwd: Vec<CellCache>,
    /// Reads `r_1 .. r_C`.
    pub right_fwd: Vec<CellCache>,
    /// Reads `r_C .. r_1`.
    pub right_bwd: Vec<CellCache>,
    /// `H_i`, left positions first, each of length `2·D_h`.
    pub outputs: Vec<Vec<f64>>,
    pub attention: AttentionScores,
}

/// The four LSTM directions of the attentive encoder.
#[derive(Clone, Copy, Debug)]
pub struct BiLstmWeights<'a> {
    pub left_fwd: LstmWeights<'a>,
    pub left_bwd: LstmWeights<'a>,
    pub right_fwd: LstmWeights<'a>,
    pub right_bwd: LstmWeights<'a>,
}

/// Gradients matching [`BiLstmWeights`].
#[derive(Clone, Debug, PartialEq)]
pub struct BiLstmGrads {
    pub left_fwd: LstmParams,
    pub left_bwd: LstmParams,
    pub right_fwd: LstmParams,
    pub right_bwd: LstmParams,
}

fn rows(t: &Tensor) -> Vec<&[f64]> {
    (0..t.rows()).map(|i| t.row(i)).collect()
}

fn bi_outputs(fwd: &[CellCache], bwd: &[CellCache]) -> Vec<Vec<f64>> {
    let c = fwd.len();
    (0..c)
        .map(|i| {
            let mut h = fwd[i].h.clone();
            // The backward reader visits position i at step c-1-i.
            h.extend_from_slice(&bwd[c - 1 - i].h);
            h
        })
        .collect()
}

/// Forward pass over embedded contexts (`[C, D_m]` each).
pub fn attentive_context(
    left: &Tensor,
    right: &Tensor,
    lstm: BiLstmWeights<'_>,
    att: AttentionWeights<'_>,
) -> (Vec<f64>, AttentiveTrace) {
    let left_in = rows(left);
    let right_in = rows(right);
    let left_rev: Vec<&[f64]> = left_in.iter().rev().copied().collect();
    let right_rev: Vec<&[f64]> = right_in.iter().rev().copied().collect();

    let left_fwd = run_sequence(&left_in, lstm.left_fwd);
    let left_bwd = run_sequence(&left_rev, lstm.left_bwd);
    let right_fwd = run_sequence(&right_in, lstm.right_fwd);
    let right_bwd = run_sequence(&right_rev, lstm.right_bwd);

    let out_l = bi_outputs(&left_fwd, &left_bwd);
    let out_r = bi_outputs(&right_fwd, &right_bwd);
    let attention = attention_scores(&out_l, &out_r, att);

    let mut outputs = out_l;
    outputs.extend(out_r);
    let dim = outputs[0].len();
    let mut context = vec![0.0; dim];
    for (a, h) in attention.weights.iter().zip(&outputs) {
        for (c, v) in context.iter_mut().zip(h) {
            *c += a * v;
        }
    }
    (
        context,
        AttentiveTrace {
            left_fwd,
            left_bwd,
            right_fwd,
            right_bwd,
            outputs,
            attention,
        },
    )
}

/// Backward pass. Returns gradients for `(W_e, W_a)` and the four LSTM
/// directions given the upstream gradient on the context vector.
pub fn attentive_context_backward(
    trace: &AttentiveTrace,
    left: &Tensor,
    right: &Tensor,
    d_context: &[f64],
    lstm: BiLstmWeights<'_>,
    att: AttentionWeights<'_>,
) -> ((Tensor, Tensor), BiLstmGrads) {
    let a = &trace.attention;
    let n = trace.outputs.len();
    let c = a.split;
    let d_h = lstm.left_fwd.hidden();

    // v = Σ a_i H_i
    let mut d_outputs: Vec<Vec<f64>> = (0..n)
        .map(|i| d_context.iter().map(|g| a.weights[i] * g).collect())
        .collect();
    let d_weights: Vec<f64> = trace.outputs.iter().map(|h| dot(h, d_context)).collect();

    // Softmax Jacobian.
    let mean: f64 = a.weights.iter().zip(&d_weights).map(|(w, d)| w * d).sum();
    let d_logits: Vec<f64> = a
        .weights
        .iter()
        .zip(&d_weights)
        .map(|(w, d)| w * (d - mean))
        .collect();

    let mut d_we = Tensor::zeros(att.w_e.shape());
    let mut d_wa = Tensor::zeros(att.w_a.shape());
    for i in 0..n {
        let e = &a.hidden[i];
        let dl = d_logits[i];
        for (g, v) in d_wa.data_mut().iter_mut().zip(e) {
            *g += dl * v;
        }
        let d_pre: Vec<f64> = att
            .w_a
            .data()
            .iter()
            .zip(e)
            .map(|(wa, ev)| dl * wa * (1.0 - ev * ev))
            .collect();
        outer_acc(&mut d_we, &d_pre, &trace.outputs[i]);
        matvec_t_acc(att.w_e, &d_pre, &mut d_outputs[i]);
    }

    // Split H_i gradients back onto the four directions.
    let split_side = |side: &[Vec<f64>]| -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let fwd: Vec<Vec<f64>> = side.iter().map(|g| g[..d_h].to_vec()).collect();
        let bwd: Vec<Vec<f64>> = side.iter().rev().map(|g| g[d_h..].to_vec()).collect();
        (fwd, bwd)
    };
    let (dl_fwd, dl_bwd) = split_side(&d_outputs[..c]);
    let (dr_fwd, dr_bwd) = split_side(&d_outputs[c..]);

    let left_in = rows(left);
    let right_in = rows(right);
    let left_rev: Vec<&[f64]> = left_in.iter().rev().copied().collect();
    let right_rev: Vec<&[f64]> = right_in.iter().rev().copied().collect();
    let d_m = left.cols();

    let mut grads = BiLstmGrads {
        left_fwd: LstmParams::zeros(d_m, d_h),
        left_bwd: LstmParams::zeros(d_m, d_h),
        right_fwd: LstmParams::zeros(d_m, d_h),
        right_bwd: LstmParams::zeros(d_m, d_h),
    };
    sequence_backward(
        &trace.left_fwd,
        &left_in,
        &dl_fwd,
        lstm.left_fwd,
        &mut grads.left_fwd,
    );
    sequence_backward(
        &trace.left_bwd,
        &left_rev,
        &dl_bwd,
        lstm.left_bwd,
        &mut grads.left_bwd,
    );
    sequence_backward(
        &trace.right_fwd,
        &right_in,
        &dr_fwd,
        lstm.right_fwd,
        &mut grads.right_fwd,
    );
    sequence_backward(
        &trace.right_bwd,
        &right_rev,
        &dr_bwd,
        lstm.right_bwd,
        &mut grads.right_bwd,
    );

    ((d_we, d_wa), grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{Rng, Tensor};

    fn random_outputs(n: usize, dim: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..dim).map(|_| rng.uniform(-1.0, 1.0)).collect())
            .collect()
    }

    #[test]
    fn zero_wa_gives_uniform_attention() {
        let mut rng = Rng::new(1);
        let w_e = crate::numeric::init_uniform(&[3, 4], 4, &mut rng).unwrap();
        let w_a = Tensor::zeros(&[1, 3]);
        let s = attention_scores(
            &random_outputs(5, 4, &mut rng),
            &random_outputs(5, 4, &mut rng),
            AttentionWeights {
                w_e: &w_e,
                w_a: &w_a,
            },
        );
        assert!(s.weights.iter().all(|&a| (a - 0.1).abs() < 1e-15));
        assert_eq!(s.left().len(), 5);
        assert_eq!(s.right().len(), 5);
    }

    #[test]
    fn hand_softmax_example() {
        let a = softmax(&[2f64.ln(), 0.0]);
        assert!((a[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((a[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn softmax_survives_huge_logits() {
        let a = softmax(&[1000.0, 999.0, -1e6]);
        assert!(a.iter().all(|v| v.is_finite()));
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let saturated = softmax(&[800.0, 0.0, 0.0]);
        assert!((saturated[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shift_invariance() {
        let mut rng = Rng::new(3);
        for _ in 0..100 {
            let logits: Vec<f64> = (0..10).map(|_| rng.uniform(-20.0, 20.0)).collect();
            let shift = rng.uniform(-50.0, 50.0);
            let shifted: Vec<f64> = logits.iter().map(|x| x + shift).collect();
            for (a, b) in softmax(&logits).iter().zip(softmax(&shifted)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
