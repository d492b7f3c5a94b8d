//! The full classifier: mention encoder, one context encoder and the
//! bias-free logistic output layer, with forward and backward passes.

use serde::{Deserialize, Serialize};

use crate::classifier::{self, LossValue, Prediction};
use crate::corpus::EmbeddedInstance;
use crate::encoders::{self, names, EncoderKind, ForwardTrace, LstmParams};
use crate::error::{Error, Result};
use crate::numeric::{init_uniform, ParamSet, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    /// `D_m`, fixed by the embedding table.
    pub embedding: usize,
    /// `D_h`
    pub hidden: usize,
    /// `D_a`
    pub attention: usize,
    /// `K`
    pub types: usize,
}

impl ModelDims {
    pub fn context(&self, kind: EncoderKind) -> usize {
        kind.context_dim(self.embedding, self.hidden)
    }
}

/// Names and shapes of every trainable tensor for `kind`.
pub fn param_shapes(kind: EncoderKind, dims: &ModelDims) -> Vec<(String, Vec<usize>)> {
    let ModelDims {
        embedding: d_m,
        hidden: d_h,
        attention: d_a,
        types: k,
    } = *dims;
    let lstm = |prefix: &str| {
        vec![
            (format!("{prefix}.w"), vec![4 * d_h, d_m]),
            (format!("{prefix}.u"), vec![4 * d_h, d_h]),
            (format!("{prefix}.b"), vec![4 * d_h]),
        ]
    };
    let mut out = vec![(names::W_Y.to_string(), vec![k, d_m + dims.context(kind)])];
    match kind {
        EncoderKind::Average => {}
        EncoderKind::Lstm => {
            out.extend(lstm(names::LEFT_FWD));
            out.extend(lstm(names::RIGHT_BWD));
        }
        EncoderKind::Attentive => {
            for prefix in [
                names::LEFT_FWD,
                names::LEFT_BWD,
                names::RIGHT_FWD,
                names::RIGHT_BWD,
            ] {
                out.extend(lstm(prefix));
            }
            out.push((names::W_E.to_string(), vec![d_a, 2 * d_h]));
            out.push((names::W_A.to_string(), vec![1, d_a]));
        }
    }
    out.sort();
    out
}

/// Fresh parameters: Glorot-uniform weights, LSTM forget-gate bias 1.
pub fn init_params(kind: EncoderKind, dims: &ModelDims, rng: &mut Rng) -> Result<ParamSet> {
    let d_m = dims.embedding;
    let d_h = dims.hidden;
    let mut p = ParamSet::new();
    let in_dim = d_m + dims.context(kind);
    p.insert(
        names::W_Y,
        init_uniform(&[dims.types, in_dim], in_dim, rng)?,
    );
    let lstm_prefixes: &[&str] = match kind {
        EncoderKind::Average => &[],
        EncoderKind::Lstm => &[names::LEFT_FWD, names::RIGHT_BWD],
        EncoderKind::Attentive => &[
            names::LEFT_FWD,
            names::LEFT_BWD,
            names::RIGHT_FWD,
            names::RIGHT_BWD,
        ],
    };
    for prefix in lstm_prefixes {
        LstmParams::init(d_m, d_h, rng)?.insert_into(&mut p, prefix);
    }
    if kind == EncoderKind::Attentive {
        p.insert(
            names::W_E,
            init_uniform(&[dims.attention, 2 * d_h], 2 * d_h, rng)?,
        );
        p.insert(
            names::W_A,
            init_uniform(&[1, dims.attention], dims.attention, rng)?,
        );
    }
    Ok(p)
}

/// Checks that `params` has exactly the tensors `kind` and `dims` require.
pub fn validate_params(kind: EncoderKind, dims: &ModelDims, params: &ParamSet) -> Result<()> {
    let expected = param_shapes(kind, dims);
    if expected.len() != params.len() {
        return Err(Error::ParamMismatch(format!(
            "expected {} tensors for the {kind} encoder, found {}",
            expected.len(),
            params.len()
        )));
    }
    for (name, shape) in expected {
        let t = params.get(&name)?;
        if t.shape() != shape.as_slice() {
            return Err(Error::Dimension {
                op: "parameter shape",
                left: shape,
                right: t.shape().to_vec(),
            });
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelOutput {
    pub trace: ForwardTrace,
    /// `[v_m (after dropout); v_c]`
    pub features: Vec<f64>,
    pub proba: Vec<f64>,
}

/// Forward pass. `mention_mask`, when given, multiplies `v_m` elementwise
/// (inverted-dropout mask).
pub fn forward(
    kind: EncoderKind,
    params: &ParamSet,
    input: &EmbeddedInstance,
    mention_mask: Option<&[f64]>,
) -> Result<ModelOutput> {
    let mut trace = encoders::encode(kind, params, input)?;
    let mention: Vec<f64> = match mention_mask {
        Some(mask) => trace.mention.iter().zip(mask).map(|(v, m)| v * m).collect(),
        None => trace.mention.clone(),
    };
    let (features, proba) =
        classifier::output_forward(&mention, &trace.context, params.get(names::W_Y)?)?;
    trace.mention = mention;
    Ok(ModelOutput {
        trace,
        features,
        proba,
    })
}

/// Per-instance loss and gradient of that loss with respect to every
/// trainable tensor.
pub fn loss_and_grad(
    kind: EncoderKind,
    params: &ParamSet,
    input: &EmbeddedInstance,
    mention_mask: Option<&[f64]>,
) -> Result<(LossValue, ParamSet)> {
    let out = forward(kind, params, input, mention_mask)?;
    let l = classifier::loss(&out.proba, &input.gold);
    let w_y = params.get(names::W_Y)?;
    let (d_wy, d_features) =
        classifier::output_backward(&out.features, &out.proba, &input.gold, w_y);
    let mut grads = ParamSet::new();
    grads.insert(names::W_Y, d_wy);
    // Mention averaging has no parameters and the embeddings are frozen, so
    // only the context part of the feature gradient is propagated.
    let d_m = out.trace.mention.len();
    encoders::context_backward(
        params,
        &out.trace.detail,
        &input.left,
        &input.right,
        &d_features[d_m..],
        &mut grads,
    )?;
    Ok((l, grads))
}

/// A trained or freshly initialized classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub kind: EncoderKind,
    pub dims: ModelDims,
    pub params: ParamSet,
}

impl Model {
    pub fn init(kind: EncoderKind, dims: ModelDims, rng: &mut Rng) -> Result<Self> {
        Ok(Model {
            kind,
            dims,
            params: init_params(kind, &dims, rng)?,
        })
    }

    pub fn from_params(kind: EncoderKind, dims: ModelDims, params: ParamSet) -> Result<Self> {
        validate_params(kind, &dims, &params)?;
        Ok(Model { kind, dims, params })
    }

    pub fn forward(&self, input: &EmbeddedInstance) -> Result<ModelOutput> {
        forward(self.kind, &self.params, input, None)
    }

    pub fn predict(&self, input: &EmbeddedInstance, threshold: f64) -> Result<Prediction> {
        Ok(Prediction::from_proba(
            self.forward(input)?.proba,
            threshold,
        ))
    }

    /// Inference-mode loss.
    pub fn loss(&self, input: &EmbeddedInstance) -> Result<LossValue> {
        Ok(classifier::loss(&self.forward(input)?.proba, &input.gold))
    }
}
