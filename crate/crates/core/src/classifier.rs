//! Bias-free logistic output layer, cross-entropy loss and the
//! at-least-one-type decision rule.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::tensor::{matvec_acc, matvec_t_acc, outer_acc};
use crate::numeric::{sigmoid, Tensor};

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const PROB_CLAMP: f64 = 1e-12;

/// `y = σ(W_y · [v_m; v_c])`. There is no bias term.
pub fn predict_proba(mention: &[f64], context: &[f64], w_y: &Tensor) -> Result<Tensor> {
    Ok(Tensor::from_vec(output_forward(mention, context, w_y)?.1))
}

/// Returns the concatenated feature vector and the probabilities.
pub(crate) fn output_forward(
    mention: &[f64],
    context: &[f64],
    w_y: &Tensor,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut x = Vec::with_capacity(mention.len() + context.len());
    x.extend_from_slice(mention);
    x.extend_from_slice(context);
    if w_y.shape().len() != 2 || w_y.cols() != x.len() {
        return Err(Error::Dimension {
            op: "predict_proba",
            left: w_y.shape().to_vec(),
            right: vec![x.len()],
        });
    }
    let mut z = vec![0.0; w_y.rows()];
    matvec_acc(w_y, &x, &mut z);
    let y = z.into_iter().map(sigmoid).collect();
    Ok((x, y))
}

/// Gradient of the summed cross-entropy with respect to `W_y` and the
/// feature vector, given `∂L/∂z = y - t`.
pub(crate) fn output_backward(x: &[f64], y: &[f64], t: &[f64], w_y: &Tensor) -> (Tensor, Vec<f64>) {
    let dz: Vec<f64> = y.iter().zip(t).map(|(y, t)| y - t).collect();
    let mut d_w = Tensor::zeros(w_y.shape());
    outer_acc(&mut d_w, &dz, x);
    let mut dx = vec![0.0; x.len()];
    matvec_t_acc(w_y, &dz, &mut dx);
    (d_w, dx)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossValue {
    pub value: f64,
    /// Probabilities clamped away from 0 or 1.
    pub saturated: usize,
}

/// `L = Σ_k -t_k log y_k - (1 - t_k) log(1 - y_k)`, with `y` clamped to
/// `[1e-12, 1 - 1e-12]`.
pub fn loss(y: &[f64], t: &[f64]) -> LossValue {
    let mut out = LossValue::default();
    for (&yk, &tk) in y.iter().zip(t) {
        let c = yk.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        if c != yk {
            out.saturated += 1;
        }
        out.value += -tk * c.ln() - (1.0 - tk) * (1.0 - c).ln();
    }
    out
}

/// Types with `y_k > threshold`, plus the argmax (lowest index on ties).
pub fn decide_with_threshold(y: &[f64], threshold: f64) -> BTreeSet<usize> {
    let mut out: BTreeSet<usize> = y
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > threshold)
        .map(|(k, _)| k)
        .collect();
    let mut best = 0;
    for (k, &v) in y.iter().enumerate() {
        if v > y[best] {
            best = k;
        }
    }
    if !y.is_empty() {
        out.insert(best);
    }
    out
}

pub fn decide(y: &[f64]) -> BTreeSet<usize> {
    decide_with_threshold(y, DEFAULT_THRESHOLD)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub proba: Vec<f64>,
    pub decided: BTreeSet<usize>,
}

impl Prediction {
    pub fn from_proba(proba: Vec<f64>, threshold: f64) -> Self {
        let decided = decide_with_threshold(&proba, threshold);
        Prediction { proba, decided }
    }
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn loss_is_nonnegative(
            pairs in proptest::collection::vec((0.0f64..=1.0, any::<bool>()), 1..20)
        ) {
            let y: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let t: Vec<f64> = pairs.iter().map(|p| p.1 as u8 as f64).collect();
            prop_assert!(loss(&y, &t).value >= 0.0);
        }

        #[test]
        fn decide_nonempty_superset(y in proptest::collection::vec(0.0f64..1.0, 1..30)) {
            let d = decide(&y);
            prop_assert!(!d.is_empty());
            for (k, &v) in y.iter().enumerate() {
                if v > 0.5 {
                    prop_assert!(d.contains(&k));
                }
            }
        }
    }
}
