//! The `finet` command line: `train`, `eval`, `predict` and `attend`.
//!
//! Exit status is 0 on success, 1 for data or model errors and 2 for usage
//! errors. Every file the commands write goes through a temporary file in
//! the target directory and is renamed into place once complete.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;

use crate::classifier::decide_with_threshold;
use crate::corpus::{read_corpus, window, EmbeddedInstance, Instance, WindowedInstance};
use crate::embeddings::{load_embeddings, EmbeddingTable};
use crate::encoders::EncoderKind;
use crate::error::{Error, Result};
use crate::trainer::{
    self, evaluate_model, load_checkpoint, predict_all, save_checkpoint, write_history, Checkpoint,
    PreparedCorpus, TrainConfig,
};

#[derive(Debug, Parser)]
#[command(
    name = "finet",
    version,
    about = "Fine-grained entity type classification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a classifier and write the best-on-dev checkpoint.
    Train(TrainArgs),
    /// Score a checkpoint on labeled data.
    Eval(EvalArgs),
    /// Write per-instance predictions as JSON lines.
    Predict(PredictArgs),
    /// Dump attention weights as TSV (attentive checkpoints only).
    Attend(AttendArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, default_value = "attentive")]
    pub encoder: EncoderKind,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub dev: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Where the best checkpoint is written.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Metric-history CSV; defaults to `<checkpoint>.history.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "ctx-window", default_value_t = 15)]
    pub ctx_window: usize,
    #[arg(long = "mention-window", default_value_t = 5)]
    pub mention_window: usize,
    #[arg(long, default_value_t = 100)]
    pub hidden: usize,
    #[arg(long = "att-hidden", default_value_t = 50)]
    pub att_hidden: usize,
    #[arg(long, default_value_t = 0.005)]
    pub lr: f64,
    #[arg(long, default_value_t = 1000)]
    pub batch: usize,
    #[arg(long, default_value_t = 0.5)]
    pub dropout: f64,
    #[arg(long = "eval-every", default_value_t = 10)]
    pub eval_every: usize,
    #[arg(long = "max-passes")]
    pub max_passes: usize,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long = "lenient-labels")]
    pub lenient_labels: bool,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long)]
    pub deterministic: bool,
    #[arg(long = "pad-symbol", default_value = crate::embeddings::DEFAULT_PAD)]
    pub pad_symbol: String,
    /// Global gradient-norm clip (off unless given).
    #[arg(long = "clip-norm")]
    pub clip_norm: Option<f64>,
}

/// Flags shared by the commands that run a saved model.
#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Defaults to the embedding file recorded in the checkpoint.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Overrides the checkpoint's decision threshold.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long = "lenient-labels")]
    pub lenient_labels: bool,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// JSON report; defaults to `<checkpoint>.eval.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AttendArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: PathBuf,
}

impl TrainArgs {
    pub fn config(&self) -> TrainConfig {
        TrainConfig {
            encoder: self.encoder,
            context_window: self.ctx_window,
            mention_window: self.mention_window,
            hidden: self.hidden,
            attention: self.att_hidden,
            learning_rate: self.lr,
            batch_size: self.batch,
            dropout: self.dropout,
            eval_every: self.eval_every,
            max_passes: self.max_passes,
            seed: self.seed,
            threshold: self.threshold,
            lenient_labels: self.lenient_labels,
            pad_symbol: self.pad_symbol.clone(),
            clip_norm: self.clip_norm,
            threads: self.threads,
            deterministic: self.deterministic,
            embeddings: Some(self.embeddings.display().to_string()),
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("FINET_LOG", "info"))
        .try_init();
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Attend(a) => cmd_attend(&a),
    }
}

/// Writes through a temporary file next to `path`, renamed on success.
fn write_atomic<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<&mut File>) -> Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn read_instances(path: &Path) -> Result<Vec<Instance>> {
    let data =
        read_corpus(open(path)?).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    if data.is_empty() {
        return Err(Error::Input(format!("{}: no instances", path.display())));
    }
    Ok(data)
}

fn read_embeddings(path: &Path, pad: &str) -> Result<EmbeddingTable> {
    let (table, report) = load_embeddings(open(path)?, None)
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    info!(
        "embeddings {}: {} vectors, dim {}, {} duplicates, unk {:?}, checksum {}",
        path.display(),
        report.entries,
        table.dim(),
        report.duplicates,
        report.unk_source,
        table.checksum()
    );
    Ok(table.with_pad_symbol(pad))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let config = a.config();
    info!("train: {config}");
    config.validate()?;
    let emb = read_embeddings(&a.embeddings, &config.pad_symbol)?;
    let train = read_instances(&a.train)?;
    let dev = read_instances(&a.dev)?;
    info!("{} training and {} dev instances", train.len(), dev.len());

    let outcome = trainer::train(&config, &train, &dev, &emb)?;
    if outcome.dropped_labels > 0 {
        info!(
            "dropped {} dev labels unknown to the training set",
            outcome.dropped_labels
        );
    }
    if outcome.saturated > 0 {
        info!(
            "{} probabilities were clamped in the loss",
            outcome.saturated
        );
    }
    write_atomic(&a.checkpoint, |w| save_checkpoint(&outcome.best, w))?;
    let history = a
        .out
        .clone()
        .unwrap_or_else(|| with_suffix(&a.checkpoint, ".history.csv"));
    write_atomic(&history, |w| write_history(w, &outcome.history))?;
    info!(
        "best pass {} written to {}; history in {}",
        outcome.best.passes,
        a.checkpoint.display(),
        history.display()
    );
    Ok(())
}

/// A loaded checkpoint with its data windowed and embedded.
struct Loaded {
    ckpt: Checkpoint,
    instances: Vec<Instance>,
    windows: Vec<WindowedInstance>,
    inputs: Vec<EmbeddedInstance>,
    dropped: usize,
    threshold: f64,
}

fn gold_set(gold: &[u8]) -> BTreeSet<usize> {
    gold.iter()
        .enumerate()
        .filter(|(_, &g)| g == 1)
        .map(|(k, _)| k)
        .collect()
}

fn load(a: &ModelArgs) -> Result<Loaded> {
    let ckpt = load_checkpoint(open(&a.checkpoint)?)?;
    let threshold = a.threshold.unwrap_or(ckpt.config.threshold);
    info!(
        "checkpoint {}: {} (pass {}, seed {}), threshold {threshold}",
        a.checkpoint.display(),
        ckpt.config,
        ckpt.passes,
        ckpt.config.seed
    );
    let emb_path = match (&a.embeddings, &ckpt.config.embeddings) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => {
            return Err(Error::Input(
                "no --embeddings given and none recorded in the checkpoint".into(),
            ))
        }
    };
    let emb = read_embeddings(&emb_path, &ckpt.config.pad_symbol)?;
    if emb.dim() != ckpt.dims.embedding {
        return Err(Error::Dimension {
            op: "embedding dimension",
            left: vec![ckpt.dims.embedding],
            right: vec![emb.dim()],
        });
    }
    let instances = read_instances(&a.data)?;
    let mut spec = ckpt.config.window_spec();
    spec.lenient_labels = a.lenient_labels;
    let mut windows = Vec::with_capacity(instances.len());
    let mut dropped = 0;
    for inst in &instances {
        let (w, d) = window(inst, &spec, &ckpt.labels)?;
        dropped += d;
        windows.push(w);
    }
    let inputs = windows
        .iter()
        .map(|w| EmbeddedInstance::new(w, &emb))
        .collect();
    if dropped > 0 {
        info!("dropped {dropped} labels unknown to the checkpoint");
    }
    Ok(Loaded {
        ckpt,
        instances,
        windows,
        inputs,
        dropped,
        threshold,
    })
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Input(format!("thread pool: {e}")))?
        .install(f)
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let l = load(&a.model)?;
    let model = l.ckpt.model()?;
    let data = PreparedCorpus {
        gold: l.windows.iter().map(|w| gold_set(&w.gold)).collect(),
        inputs: l.inputs,
        dropped_labels: l.dropped,
    };
    let report = in_pool(a.model.threads, || {
        evaluate_model(&model, &data, l.threshold)
    })?;
    println!("{report}");
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| with_suffix(&a.model.checkpoint, ".eval.json"));
    write_atomic(&out, |w| {
        w.write_all(report.to_json().as_bytes())?;
        w.write_all(b"\n")?;
        Ok(())
    })?;
    info!("report written to {}", out.display());
    Ok(())
}

#[derive(Serialize)]
struct PredictionLine<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    gold: Option<Vec<&'a str>>,
    pred: Vec<&'a str>,
    proba: &'a [f64],
}

fn cmd_predict(a: &PredictArgs) -> Result<()> {
    let l = load(&a.model)?;
    let model = l.ckpt.model()?;
    let preds = in_pool(a.model.threads, || {
        predict_all(&model, &l.inputs, l.threshold)
    })?;
    let labels = &l.ckpt.labels;
    write_atomic(&a.out, |w| {
        for ((inst, win), p) in l.instances.iter().zip(&l.windows).zip(&preds) {
            let line = PredictionLine {
                gold: inst.is_labeled().then(|| {
                    gold_set(&win.gold)
                        .iter()
                        .map(|&k| labels.name(k))
                        .collect()
                }),
                pred: p.decided.iter().map(|&k| labels.name(k)).collect(),
                proba: &p.proba,
            };
            serde_json::to_writer(&mut *w, &line).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })?;
    info!("{} predictions written to {}", preds.len(), a.out.display());
    Ok(())
}

pub const ATTEND_HEADER: &str = "instance\ttoken\tside\tposition\tattention\tpredicted";

fn cmd_attend(a: &AttendArgs) -> Result<()> {
    let l = load(&a.model)?;
    if l.ckpt.config.encoder != EncoderKind::Attentive {
        return Err(Error::UnsupportedEncoder(format!(
            "attention dumps need an attentive checkpoint, this one uses the {} encoder",
            l.ckpt.config.encoder
        )));
    }
    let model = l.ckpt.model()?;
    let labels = &l.ckpt.labels;
    write_atomic(&a.out, |w| {
        writeln!(w, "{ATTEND_HEADER}")?;
        for (i, (win, x)) in l.windows.iter().zip(&l.inputs).enumerate() {
            let out = model.forward(x)?;
            let att = out.trace.attention().expect("attentive trace");
            let predicted = labels
                .names(&decide_with_threshold(&out.proba, l.threshold))
                .join(",");
            for (side, tokens, weights) in
                [("L", &win.left, att.left()), ("R", &win.right, att.right())]
            {
                for (pos, (tok, a_i)) in tokens.iter().zip(weights).enumerate() {
                    writeln!(w, "{i}\t{tok}\t{side}\t{}\t{a_i}\t{predicted}", pos + 1)?;
                }
            }
        }
        Ok(())
    })?;
    info!(
        "attention for {} instances written to {}",
        l.instances.len(),
        a.out.display()
    );
    Ok(())
}
