//! Mini-batch Adam training with inverted dropout on the mention
//! representation and best-on-dev model selection.
//!
//! Each pass shuffles the training set, steps Adam once per batch on the
//! batch-mean loss, and every `eval_every` passes (and after the last pass)
//! scores the dev set. The returned checkpoint is the evaluated state with
//! the highest dev loose-micro F1; ties keep the earliest.

pub mod checkpoint;

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{self, Prediction};
use crate::corpus::{
    batch_indices, build_label_index, window, EmbeddedInstance, Instance, LabelIndex, WindowSpec,
};
use crate::embeddings::{EmbeddingTable, DEFAULT_PAD};
use crate::encoders::EncoderKind;
use crate::error::{Error, Result};
use crate::metrics::{evaluate, EvalReport};
use crate::model::{self, Model, ModelDims};
use crate::numeric::{adam_step, AdamConfig, AdamState, ParamSet, Rng, Tensor};

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};

/// Instances per reduction chunk. Fixed so that the summation order, and
/// hence every bit of the result, does not depend on the thread count.
const REDUCE_CHUNK: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub encoder: EncoderKind,
    /// `C`
    pub context_window: usize,
    /// `M`
    pub mention_window: usize,
    /// `D_h`
    pub hidden: usize,
    /// `D_a`
    pub attention: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub dropout: f64,
    /// Passes over the training data between dev evaluations.
    pub eval_every: usize,
    pub max_passes: usize,
    pub seed: u64,
    /// Decision threshold used for dev evaluation and prediction.
    pub threshold: f64,
    pub lenient_labels: bool,
    pub pad_symbol: String,
    /// Global gradient-norm clip; `None` disables clipping.
    pub clip_norm: Option<f64>,
    pub threads: usize,
    /// Reduce gradients in a fixed order for bitwise reproducibility.
    pub deterministic: bool,
    /// Embedding file the model was trained with, for later commands.
    pub embeddings: Option<String>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            encoder: EncoderKind::Attentive,
            context_window: 15,
            mention_window: 5,
            hidden: 100,
            attention: 50,
            learning_rate: 0.005,
            batch_size: 1000,
            dropout: 0.5,
            eval_every: 10,
            max_passes: 10,
            seed: 0,
            threshold: classifier::DEFAULT_THRESHOLD,
            lenient_labels: false,
            pad_symbol: DEFAULT_PAD.to_string(),
            clip_norm: None,
            threads: 1,
            deterministic: true,
            embeddings: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("context window", self.context_window),
            ("mention window", self.mention_window),
            ("hidden size", self.hidden),
            ("attention size", self.attention),
            ("batch size", self.batch_size),
            ("eval_every", self.eval_every),
            ("max passes", self.max_passes),
            ("threads", self.threads),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Input(format!("{name} must be at least 1")));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Input(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Input(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(Error::Input(format!("clip norm {c} must be positive")));
            }
        }
        Ok(())
    }

    pub fn window_spec(&self) -> WindowSpec {
        WindowSpec {
            context: self.context_window,
            mention: self.mention_window,
            pad: self.pad_symbol.clone(),
            lenient_labels: self.lenient_labels,
        }
    }
}

impl fmt::Display for TrainConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "encoder={} C={} M={} D_h={} D_a={} alpha={} batch={} dropout={} eval_every={} \
             max_passes={} seed={} threshold={} lenient_labels={} pad={} clip={} threads={} \
             deterministic={} selection=loose_micro_f1",
            self.encoder,
            self.context_window,
            self.mention_window,
            self.hidden,
            self.attention,
            self.learning_rate,
            self.batch_size,
            self.dropout,
            self.eval_every,
            self.max_passes,
            self.seed,
            self.threshold,
            self.lenient_labels,
            self.pad_symbol,
            self.clip_norm.map_or("off".to_string(), |c| c.to_string()),
            self.threads,
            self.deterministic,
        )
    }
}

/// One dev evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub pass: usize,
    /// Mean training loss over the pass.
    pub loss: f64,
    pub strict: f64,
    pub loose_macro: f64,
    pub loose_micro: f64,
}

pub const HISTORY_HEADER: &str = "pass,loss,strict,loose_macro,loose_micro";

/// Writes the metric history as CSV.
pub fn write_history<W: Write>(mut sink: W, history: &[HistoryRow]) -> Result<()> {
    writeln!(sink, "{HISTORY_HEADER}")?;
    for r in history {
        writeln!(
            sink,
            "{},{},{},{},{}",
            r.pass, r.loss, r.strict, r.loose_macro, r.loose_micro
        )?;
    }
    Ok(())
}

/// Inverted-dropout mask: each entry is 0 with probability `p`, else
/// `1 / (1 - p)`.
pub fn dropout_mask(dim: usize, p: f64, rng: &mut Rng) -> Vec<f64> {
    let keep = 1.0 / (1.0 - p);
    (0..dim)
        .map(|_| if rng.bernoulli(p) { 0.0 } else { keep })
        .collect()
}

/// Inverted dropout on the mention representation; identity at inference.
pub fn dropout_mention(v_m: &Tensor, p: f64, rng: &mut Rng, training: bool) -> Tensor {
    if !training || p == 0.0 {
        return v_m.clone();
    }
    let mask = dropout_mask(v_m.len(), p, rng);
    Tensor::from_vec(v_m.data().iter().zip(mask).map(|(v, m)| v * m).collect())
}

/// Windowed, embedded corpus with gold label sets.
#[derive(Clone, Debug)]
pub struct PreparedCorpus {
    pub inputs: Vec<EmbeddedInstance>,
    pub gold: Vec<BTreeSet<usize>>,
    pub dropped_labels: usize,
}

pub fn prepare(
    instances: &[Instance],
    spec: &WindowSpec,
    labels: &LabelIndex,
    emb: &EmbeddingTable,
) -> Result<PreparedCorpus> {
    let mut out = PreparedCorpus {
        inputs: Vec::with_capacity(instances.len()),
        gold: Vec::with_capacity(instances.len()),
        dropped_labels: 0,
    };
    for inst in instances {
        let (w, dropped) = window(inst, spec, labels)?;
        out.dropped_labels += dropped;
        out.gold.push(
            w.gold
                .iter()
                .enumerate()
                .filter(|(_, &g)| g == 1)
                .map(|(k, _)| k)
                .collect(),
        );
        out.inputs.push(EmbeddedInstance::new(&w, emb));
    }
    Ok(out)
}

pub fn predict_all(
    model: &Model,
    inputs: &[EmbeddedInstance],
    threshold: f64,
) -> Result<Vec<Prediction>> {
    inputs
        .par_iter()
        .map(|x| model.predict(x, threshold))
        .collect()
}

/// Scores a model on a prepared corpus.
pub fn evaluate_model(model: &Model, data: &PreparedCorpus, threshold: f64) -> Result<EvalReport> {
    let preds = predict_all(model, &data.inputs, threshold)?;
    let pairs: Vec<(BTreeSet<usize>, BTreeSet<usize>)> = preds
        .into_iter()
        .map(|p| p.decided)
        .zip(data.gold.iter().cloned())
        .collect();
    evaluate(&pairs)
}

/// Mean inference-mode loss.
pub fn mean_loss(model: &Model, inputs: &[EmbeddedInstance]) -> Result<f64> {
    let losses: Vec<f64> = inputs
        .par_iter()
        .map(|x| model.loss(x).map(|l| l.value))
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / inputs.len() as f64)
}

struct BatchResult {
    loss: f64,
    saturated: usize,
    grads: ParamSet,
}

fn batch_gradient(
    model: &Model,
    inputs: &[EmbeddedInstance],
    batch: &[usize],
    masks: &[Option<Vec<f64>>],
    deterministic: bool,
) -> Result<BatchResult> {
    let one = |j: usize| -> Result<BatchResult> {
        let (l, g) = model::loss_and_grad(
            model.kind,
            &model.params,
            &inputs[batch[j]],
            masks[j].as_deref(),
        )?;
        Ok(BatchResult {
            loss: l.value,
            saturated: l.saturated,
            grads: g,
        })
    };
    let merge = |mut a: BatchResult, b: BatchResult| -> Result<BatchResult> {
        a.loss += b.loss;
        a.saturated += b.saturated;
        a.grads.add_assign(&b.grads)?;
        Ok(a)
    };
    let mut total = if deterministic {
        let idx: Vec<usize> = (0..batch.len()).collect();
        let partials: Vec<BatchResult> = idx
            .par_chunks(REDUCE_CHUNK)
            .map(|chunk| {
                let mut acc = one(chunk[0])?;
                for &j in &chunk[1..] {
                    acc = merge(acc, one(j)?)?;
                }
                Ok(acc)
            })
            .collect::<Result<_>>()?;
        let mut it = partials.into_iter();
        let first = it.next().expect("non-empty batch");
        it.try_fold(first, merge)?
    } else {
        (0..batch.len())
            .into_par_iter()
            .map(one)
            .try_reduce_with(merge)
            .expect("non-empty batch")?
    };
    let n = batch.len() as f64;
    total.loss /= n;
    total.grads.scale(1.0 / n);
    Ok(total)
}

fn clip(grads: &mut ParamSet, max_norm: f64) {
    let norm = grads.global_norm();
    if norm > max_norm {
        grads.scale(max_norm / norm);
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub best: Checkpoint,
    /// One row per dev evaluation.
    pub history: Vec<HistoryRow>,
    /// Batch-mean training loss after every update, in order.
    pub update_losses: Vec<f64>,
    /// Mean inference-mode training loss before the first update.
    pub initial_loss: f64,
    /// Clamped probabilities seen during training.
    pub saturated: usize,
    pub dropped_labels: usize,
}

/// Trains a classifier and returns the best-on-dev checkpoint.
pub fn train(
    config: &TrainConfig,
    train_set: &[Instance],
    dev_set: &[Instance],
    emb: &EmbeddingTable,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::Corpus("training corpus is empty".into()));
    }
    if dev_set.is_empty() {
        return Err(Error::Corpus("dev corpus is empty".into()));
    }
    if let Some(i) = train_set.iter().position(|x| !x.is_labeled()) {
        return Err(Error::Corpus(format!(
            "training instance {i} has no labels"
        )));
    }
    let labels = build_label_index(train_set)?;
    let mut train_spec = config.window_spec();
    train_spec.lenient_labels = false;
    let train_data = prepare(train_set, &train_spec, &labels, emb)?;
    let dev_data = prepare(dev_set, &config.window_spec(), &labels, emb)?;
    if let Some(i) = dev_data.gold.iter().position(BTreeSet::is_empty) {
        return Err(Error::Corpus(format!(
            "dev instance {i} has no labels known to the training set"
        )));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Input(format!("thread pool: {e}")))?;
    pool.install(|| run(config, labels, &train_data, &dev_data, emb))
}

fn run(
    config: &TrainConfig,
    labels: LabelIndex,
    train_data: &PreparedCorpus,
    dev_data: &PreparedCorpus,
    emb: &EmbeddingTable,
) -> Result<TrainOutcome> {
    let dims = ModelDims {
        embedding: emb.dim(),
        hidden: config.hidden,
        attention: config.attention,
        types: labels.len(),
    };
    let mut root = Rng::new(config.seed);
    let mut init_rng = root.split();
    let mut shuffle_rng = root.split();
    let mut dropout_rng = root.split();

    let mut model = Model::init(config.encoder, dims, &mut init_rng)?;
    let mut adam = AdamState::new(
        &model.params,
        AdamConfig {
            alpha: config.learning_rate,
            ..AdamConfig::default()
        },
    );
    let initial_loss = mean_loss(&model, &train_data.inputs)?;
    info!(
        "K={} D_m={} trainable scalars={} initial loss {:.6} ({:.6} per type)",
        dims.types,
        dims.embedding,
        model.params.num_scalars(),
        initial_loss,
        initial_loss / dims.types as f64
    );

    let mut history = Vec::new();
    let mut update_losses = Vec::new();
    let mut saturated = 0;
    let mut best: Option<(f64, usize, ParamSet)> = None;

    for pass in 1..=config.max_passes {
        let order = batch_indices(train_data.inputs.len(), config.batch_size, &mut shuffle_rng)?;
        let mut pass_loss = 0.0;
        for (b, batch) in order.iter().enumerate() {
            let masks: Vec<Option<Vec<f64>>> = batch
                .iter()
                .map(|_| {
                    (config.dropout > 0.0)
                        .then(|| dropout_mask(dims.embedding, config.dropout, &mut dropout_rng))
                })
                .collect();
            let mut r = batch_gradient(
                &model,
                &train_data.inputs,
                batch,
                &masks,
                config.deterministic,
            )?;
            if !r.loss.is_finite() || !r.grads.global_norm().is_finite() {
                return Err(Error::NonFiniteLoss {
                    pass,
                    batch: b,
                    norms: model.params.norms_summary(),
                });
            }
            if let Some(max) = config.clip_norm {
                clip(&mut r.grads, max);
            }
            adam_step(&mut model.params, &r.grads, &mut adam)?;
            saturated += r.saturated;
            pass_loss += r.loss * batch.len() as f64;
            update_losses.push(r.loss);
        }
        let pass_loss = pass_loss / train_data.inputs.len() as f64;
        debug!("pass {pass}: loss {pass_loss:.6}");

        if pass % config.eval_every == 0 || pass == config.max_passes {
            let report = evaluate_model(&model, dev_data, config.threshold)?;
            let row = HistoryRow {
                pass,
                loss: pass_loss,
                strict: report.strict.f1,
                loose_macro: report.loose_macro.f1,
                loose_micro: report.loose_micro.f1,
            };
            info!(
                "pass {pass}: loss {:.6} dev strict {:.2} loose-macro {:.2} loose-micro {:.2}",
                row.loss,
                100.0 * row.strict,
                100.0 * row.loose_macro,
                100.0 * row.loose_micro
            );
            history.push(row);
            if best.as_ref().is_none_or(|(f, _, _)| row.loose_micro > *f) {
                best = Some((row.loose_micro, pass, model.params.clone()));
            }
        }
    }

    let (_, best_pass, params) = best.expect("at least one dev evaluation");
    let best = Checkpoint {
        config: config.clone(),
        labels,
        dims,
        params,
        passes: best_pass,
        history: history.clone(),
    };
    Ok(TrainOutcome {
        best,
        history,
        update_losses,
        initial_loss,
        saturated,
        dropped_labels: dev_data.dropped_labels,
    })
}
