//! Mention and context encoders.
//!
//! The mention is always the plain average of its `M` window embeddings.
//! Three context encoders are available:
//!
//! | kind        | output       | trainable parameters                      |
//! |-------------|--------------|-------------------------------------------|
//! | `average`   | `2·D_m`      | none                                      |
//! | `lstm`      | `2·D_h`      | left forward LSTM, right backward LSTM    |
//! | `attentive` | `2·D_h`      | four LSTM directions, `W_e`, `W_a`        |
//!
//! Averages divide by the window width, so padding (the zero vector) dilutes
//! rather than being skipped.

pub mod attention;
pub mod lstm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{EmbeddedInstance, WindowedInstance};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::numeric::{ParamSet, Tensor};

pub use attention::{
    attention_scores, attentive_context, attentive_context_backward, softmax, AttentionScores,
    AttentionWeights, AttentiveTrace, BiLstmWeights,
};
pub use lstm::{lstm_cell, lstm_cell_backward, CellCache, LstmParams, LstmWeights};

/// Parameter names used in [`ParamSet`]s and checkpoints.
pub mod names {
    pub const W_Y: &str = "output.w_y";
    pub const W_E: &str = "attention.w_e";
    pub const W_A: &str = "attention.w_a";
    pub const LEFT_FWD: &str = "lstm.left.fwd";
    pub const LEFT_BWD: &str = "lstm.left.bwd";
    pub const RIGHT_FWD: &str = "lstm.right.fwd";
    pub const RIGHT_BWD: &str = "lstm.right.bwd";
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    Average,
    Lstm,
    Attentive,
}

impl EncoderKind {
    pub const ALL: [EncoderKind; 3] = [
        EncoderKind::Average,
        EncoderKind::Lstm,
        EncoderKind::Attentive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EncoderKind::Average => "average",
            EncoderKind::Lstm => "lstm",
            EncoderKind::Attentive => "attentive",
        }
    }

    /// Context representation size `D_c`.
    pub fn context_dim(self, d_m: usize, d_h: usize) -> usize {
        match self {
            EncoderKind::Average => 2 * d_m,
            EncoderKind::Lstm | EncoderKind::Attentive => 2 * d_h,
        }
    }
}

impl fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EncoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "average" => Ok(EncoderKind::Average),
            "lstm" => Ok(EncoderKind::Lstm),
            "attentive" => Ok(EncoderKind::Attentive),
            other => Err(Error::Input(format!(
                "unknown encoder `{other}` (expected average, lstm or attentive)"
            ))),
        }
    }
}

/// Encoder-specific intermediate values.
#[derive(Clone, Debug, PartialEq)]
pub enum ContextTrace {
    Average,
    Lstm {
        /// Reads `l_1 .. l_C`.
        left: Vec<CellCache>,
        /// Reads `r_C .. r_1`.
        right: Vec<CellCache>,
    },
    Attentive(Box<AttentiveTrace>),
}

/// Encoder outputs plus everything needed for the backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace {
    /// `v_m`
    pub mention: Vec<f64>,
    /// `v_c`
    pub context: Vec<f64>,
    pub detail: ContextTrace,
}

impl ForwardTrace {
    pub fn attention(&self) -> Option<&AttentionScores> {
        match &self.detail {
            ContextTrace::Attentive(t) => Some(&t.attention),
            _ => None,
        }
    }
}

/// Mean of the rows of an `[n, d]` matrix.
fn row_mean(m: &Tensor) -> Vec<f64> {
    let n = m.rows() as f64;
    let mut out = vec![0.0; m.cols()];
    for i in 0..m.rows() {
        for (o, v) in out.iter_mut().zip(m.row(i)) {
            *o += v;
        }
    }
    out.iter_mut().for_each(|o| *o /= n);
    out
}

/// `v_m = (1/M) Σ u(m_i)` over an embedded `[M, D_m]` mention window.
pub fn mention_average(mention: &Tensor) -> Vec<f64> {
    row_mean(mention)
}

/// `v_c = (1/C) Σ [u(l_i); u(r_i)]`.
pub fn context_average(left: &Tensor, right: &Tensor) -> Vec<f64> {
    let mut v = row_mean(left);
    v.extend(row_mean(right));
    v
}

pub fn mention_encode(w: &WindowedInstance, emb: &EmbeddingTable) -> Tensor {
    Tensor::from_vec(mention_average(&emb.embed(&w.mention)))
}

pub fn ctx_average(w: &WindowedInstance, emb: &EmbeddingTable) -> Tensor {
    Tensor::from_vec(context_average(&emb.embed(&w.left), &emb.embed(&w.right)))
}

pub fn ctx_lstm(
    w: &WindowedInstance,
    emb: &EmbeddingTable,
    params: &ParamSet,
) -> Result<(Tensor, ForwardTrace)> {
    encode_window(EncoderKind::Lstm, w, emb, params)
}

pub fn ctx_attentive(
    w: &WindowedInstance,
    emb: &EmbeddingTable,
    params: &ParamSet,
) -> Result<(Tensor, ForwardTrace)> {
    encode_window(EncoderKind::Attentive, w, emb, params)
}

fn encode_window(
    kind: EncoderKind,
    w: &WindowedInstance,
    emb: &EmbeddingTable,
    params: &ParamSet,
) -> Result<(Tensor, ForwardTrace)> {
    let trace = encode(kind, params, &EmbeddedInstance::new(w, emb))?;
    Ok((Tensor::from_vec(trace.context.clone()), trace))
}

fn rows(t: &Tensor) -> Vec<&[f64]> {
    (0..t.rows()).map(|i| t.row(i)).collect()
}

fn bi_lstm(params: &ParamSet) -> Result<BiLstmWeights<'_>> {
    Ok(BiLstmWeights {
        left_fwd: LstmWeights::from_set(params, names::LEFT_FWD)?,
        left_bwd: LstmWeights::from_set(params, names::LEFT_BWD)?,
        right_fwd: LstmWeights::from_set(params, names::RIGHT_FWD)?,
        right_bwd: LstmWeights::from_set(params, names::RIGHT_BWD)?,
    })
}

/// Context forward pass over embedded `[C, D_m]` windows.
pub fn encode_context(
    kind: EncoderKind,
    params: &ParamSet,
    left: &Tensor,
    right: &Tensor,
) -> Result<(Vec<f64>, ContextTrace)> {
    match kind {
        EncoderKind::Average => Ok((context_average(left, right), ContextTrace::Average)),
        EncoderKind::Lstm => {
            let lp = LstmWeights::from_set(params, names::LEFT_FWD)?;
            let rp = LstmWeights::from_set(params, names::RIGHT_BWD)?;
            let left_in = rows(left);
            let right_rev: Vec<&[f64]> = rows(right).into_iter().rev().collect();
            let lc = lstm::run_sequence(&left_in, lp);
            let rc = lstm::run_sequence(&right_rev, rp);
            // [h→_C(l); h←_1(r)]: the last step of each reader.
            let mut v = lc.last().expect("C >= 1").h.clone();
            v.extend_from_slice(&rc.last().expect("C >= 1").h);
            Ok((
                v,
                ContextTrace::Lstm {
                    left: lc,
                    right: rc,
                },
            ))
        }
        EncoderKind::Attentive => {
            let (v, t) = attentive_context(
                left,
                right,
                bi_lstm(params)?,
                AttentionWeights::from_set(params)?,
            );
            Ok((v, ContextTrace::Attentive(Box::new(t))))
        }
    }
}

/// Accumulates context-encoder parameter gradients into `grads`.
pub fn context_backward(
    params: &ParamSet,
    trace: &ContextTrace,
    left: &Tensor,
    right: &Tensor,
    d_context: &[f64],
    grads: &mut ParamSet,
) -> Result<()> {
    match trace {
        ContextTrace::Average => {}
        ContextTrace::Lstm {
            left: lc,
            right: rc,
        } => {
            let lp = LstmWeights::from_set(params, names::LEFT_FWD)?;
            let rp = LstmWeights::from_set(params, names::RIGHT_BWD)?;
            let d_h = lp.hidden();
            let left_in = rows(left);
            let right_rev: Vec<&[f64]> = rows(right).into_iter().rev().collect();

            let only_last = |n: usize, g: &[f64]| -> Vec<Vec<f64>> {
                let mut v = vec![vec![0.0; d_h]; n];
                v[n - 1] = g.to_vec();
                v
            };
            let mut gl = LstmParams::zeros(lp.input_dim(), d_h);
            lstm::sequence_backward(
                lc,
                &left_in,
                &only_last(lc.len(), &d_context[..d_h]),
                lp,
                &mut gl,
            );
            let mut gr = LstmParams::zeros(rp.input_dim(), d_h);
            lstm::sequence_backward(
                rc,
                &right_rev,
                &only_last(rc.len(), &d_context[d_h..]),
                rp,
                &mut gr,
            );
            gl.insert_into(grads, names::LEFT_FWD);
            gr.insert_into(grads, names::RIGHT_BWD);
        }
        ContextTrace::Attentive(t) => {
            let ((d_we, d_wa), g) = attentive_context_backward(
                t,
                left,
                right,
                d_context,
                bi_lstm(params)?,
                AttentionWeights::from_set(params)?,
            );
            grads.insert(names::W_E, d_we);
            grads.insert(names::W_A, d_wa);
            g.left_fwd.insert_into(grads, names::LEFT_FWD);
            g.left_bwd.insert_into(grads, names::LEFT_BWD);
            g.right_fwd.insert_into(grads, names::RIGHT_FWD);
            g.right_bwd.insert_into(grads, names::RIGHT_BWD);
        }
    }
    Ok(())
}

/// Mention and context forward pass for one embedded instance.
pub fn encode(
    kind: EncoderKind,
    params: &ParamSet,
    input: &EmbeddedInstance,
) -> Result<ForwardTrace> {
    let mention = mention_average(&input.mention);
    let (context, detail) = encode_context(kind, params, &input.left, &input.right)?;
    Ok(ForwardTrace {
        mention,
        context,
        detail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::WindowedInstance;
    use crate::embeddings::EmbeddingTable;

    fn table(entries: &[(&str, Vec<f64>)]) -> EmbeddingTable {
        let dim = entries[0].1.len();
        EmbeddingTable::from_entries(dim, entries.iter().map(|(t, v)| (t.to_string(), v.clone())))
            .unwrap()
            .0
    }

    fn win(left: &[&str], mention: &[&str], right: &[&str]) -> WindowedInstance {
        let s = |v: &[&str]| v.iter().map(|t| t.to_string()).collect();
        WindowedInstance {
            left: s(left),
            mention: s(mention),
            right: s(right),
            gold: vec![1],
        }
    }

    #[test]
    fn mention_average_examples() {
        let emb = table(&[
            ("a", vec![2.0, 4.0]),
            ("b", vec![2.0, 4.0]),
            ("x", vec![1.0, 0.0]),
        ]);
        assert_eq!(
            mention_encode(&win(&["a"], &["a", "b"], &["a"]), &emb).data(),
            &[2.0, 4.0]
        );
        assert_eq!(
            mention_encode(&win(&["a"], &["x", "<pad>"], &["a"]), &emb).data(),
            &[0.5, 0.0]
        );
        assert_eq!(
            mention_encode(&win(&["a"], &["<pad>", "<pad>"], &["a"]), &emb).data(),
            &[0.0, 0.0]
        );
    }

    #[test]
    fn context_average_examples() {
        let emb = table(&[
            ("l", vec![1.0, 0.0]),
            ("r", vec![0.0, 1.0]),
            ("p", vec![2.0, 0.0]),
            ("q", vec![0.0, 2.0]),
        ]);
        assert_eq!(
            ctx_average(&win(&["l"], &["l"], &["r"]), &emb).data(),
            &[1.0, 0.0, 0.0, 1.0]
        );
        assert_eq!(
            ctx_average(&win(&["<pad>"], &["l"], &["<pad>"]), &emb).data(),
            &[0.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(
            ctx_average(&win(&["p", "q"], &["l"], &["<pad>", "<pad>"]), &emb).data(),
            &[1.0, 1.0, 0.0, 0.0]
        );
    }

    fn lstm_zero_params(d_m: usize, d_h: usize) -> ParamSet {
        let mut p = ParamSet::new();
        LstmParams::zeros(d_m, d_h).insert_into(&mut p, names::LEFT_FWD);
        LstmParams::zeros(d_m, d_h).insert_into(&mut p, names::RIGHT_BWD);
        p
    }

    #[test]
    fn lstm_context_with_zero_weights() {
        let emb = table(&[("l", vec![1.0, 0.0]), ("r", vec![0.0, 1.0])]);
        let params = lstm_zero_params(2, 3);
        let (v, _) = ctx_lstm(&win(&["l"], &["l"], &["r"]), &emb, &params).unwrap();
        // One cell from zero state: s = 0.5·0 + 0.5·tanh(0) = 0, so h = 0.
        let single = lstm_cell(
            &[1.0, 0.0],
            &[0.0; 3],
            &[0.0; 3],
            LstmParams::zeros(2, 3).view(),
        );
        let mut expected = single.h.clone();
        expected.extend(single.h);
        assert_eq!(v.data(), expected.as_slice());
        assert_eq!(v.len(), 6);

        let (v, _) = ctx_lstm(&win(&["<pad>"], &["l"], &["<pad>"]), &emb, &params).unwrap();
        assert!(v.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn lstm_context_uses_final_reader_states() {
        let mut rng = crate::numeric::Rng::new(4);
        let mut params = ParamSet::new();
        LstmParams::init(2, 3, &mut rng)
            .unwrap()
            .insert_into(&mut params, names::LEFT_FWD);
        LstmParams::init(2, 3, &mut rng)
            .unwrap()
            .insert_into(&mut params, names::RIGHT_BWD);
        let emb = table(&[
            ("a", vec![1.0, -1.0]),
            ("b", vec![0.5, 2.0]),
            ("c", vec![-1.0, 0.3]),
        ]);
        let (v, trace) = ctx_lstm(&win(&["a", "b"], &["a"], &["b", "c"]), &emb, &params).unwrap();

        let lp = LstmWeights::from_set(&params, names::LEFT_FWD).unwrap();
        let rp = LstmWeights::from_set(&params, names::RIGHT_BWD).unwrap();
        let l = lstm::run_sequence(&[&[1.0, -1.0], &[0.5, 2.0]], lp);
        // The right reader starts from r_C = "c" and ends on r_1 = "b".
        let r = lstm::run_sequence(&[&[-1.0, 0.3], &[0.5, 2.0]], rp);
        let mut expected = l[1].h.clone();
        expected.extend(&r[1].h);
        assert_eq!(v.data(), expected.as_slice());
        assert!(matches!(trace.detail, ContextTrace::Lstm { .. }));
    }

    #[test]
    fn encoder_kind_parsing() {
        for k in EncoderKind::ALL {
            assert_eq!(k.as_str().parse::<EncoderKind>().unwrap(), k);
        }
        assert!("gru".parse::<EncoderKind>().is_err());
        assert_eq!(EncoderKind::Average.context_dim(300, 100), 600);
        assert_eq!(EncoderKind::Attentive.context_dim(300, 100), 200);
    }
}
