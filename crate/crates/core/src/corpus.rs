//! Labeled mention instances, the label index, fixed-width windowing and
//! mini-batching.
//!
//! Corpus files are JSON lines:
//!
//! ```text
//! {"tokens":["She","met","Obama"],"mention_start":2,"mention_end":3,"labels":["/person"]}
//! ```
//!
//! `labels` may be omitted for unlabeled prediction input.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::embeddings::{EmbeddingTable, DEFAULT_PAD};
use crate::error::{Error, Result};
use crate::numeric::{Rng, Tensor};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub tokens: Vec<String>,
    pub mention_start: usize,
    pub mention_end: usize,
    #[serde(default)]
    pub labels: Vec<String>,
}

impl Instance {
    pub fn mention(&self) -> &[String] {
        &self.tokens[self.mention_start..self.mention_end]
    }

    pub fn is_labeled(&self) -> bool {
        !self.labels.is_empty()
    }

    fn validate(&self) -> Result<()> {
        if self.tokens.is_empty() {
            return Err(Error::Parse {
                line: 0,
                msg: "empty token list".into(),
            });
        }
        if self.mention_start >= self.mention_end || self.mention_end > self.tokens.len() {
            return Err(Error::Span {
                start: self.mention_start,
                end: self.mention_end,
                len: self.tokens.len(),
            });
        }
        Ok(())
    }
}

/// Parses and validates one JSON object.
pub fn parse_instance(line: &str) -> Result<Instance> {
    let inst: Instance = serde_json::from_str(line).map_err(|e| Error::Parse {
        line: e.line(),
        msg: format!(
            "malformed JSON at byte offset {}: {e}",
            e.column().saturating_sub(1)
        ),
    })?;
    inst.validate()?;
    Ok(inst)
}

/// Reads a JSON-lines corpus, skipping blank lines. Errors carry the
/// 1-based line number within the stream.
pub fn read_corpus<R: BufRead>(source: R) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let inst = parse_instance(&line).map_err(|e| match e {
            Error::Parse { msg, .. } => Error::Parse { line: i + 1, msg },
            Error::Span { start, end, len } => Error::Parse {
                line: i + 1,
                msg: Error::Span { start, end, len }.to_string(),
            },
            other => other,
        })?;
        out.push(inst);
    }
    Ok(out)
}

pub fn write_corpus<W: Write>(mut sink: W, instances: &[Instance]) -> Result<()> {
    for inst in instances {
        serde_json::to_writer(&mut sink, inst).map_err(std::io::Error::from)?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}

/// Ordered set of type names; a type's index is its position.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct LabelIndex {
    types: Vec<String>,
    #[serde(skip)]
    reverse: HashMap<String, usize>,
}

impl LabelIndex {
    /// Builds an index from names, sorting and de-duplicating them.
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let types: BTreeSet<String> = names.into_iter().map(Into::into).collect();
        Self::from_ordered(types.into_iter().collect())
    }

    /// Keeps the given order; used when reading an index file back.
    pub fn from_ordered(types: Vec<String>) -> Result<Self> {
        if types.is_empty() {
            return Err(Error::Corpus("label index needs at least one type".into()));
        }
        let reverse: HashMap<String, usize> = types
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        if reverse.len() != types.len() {
            return Err(Error::Corpus("duplicate type in label index".into()));
        }
        Ok(LabelIndex { types, reverse })
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn types(&self) -> &[String] {
        &self.types
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.reverse.get(name).copied()
    }

    pub fn name(&self, index: usize) -> &str {
        &self.types[index]
    }

    /// Type names for a set of indices, in index order.
    pub fn names<'a>(&'a self, indices: impl IntoIterator<Item = &'a usize>) -> Vec<String> {
        let set: BTreeSet<usize> = indices.into_iter().copied().collect();
        set.into_iter().map(|i| self.types[i].clone()).collect()
    }

    /// Label set encoded by a binary gold vector.
    pub fn decode(&self, gold: &[u8]) -> BTreeSet<String> {
        gold.iter()
            .enumerate()
            .filter(|(_, &g)| g == 1)
            .map(|(i, _)| self.types[i].clone())
            .collect()
    }

    /// One type per line; the line number is the index.
    pub fn write<W: Write>(&self, mut sink: W) -> Result<()> {
        for t in &self.types {
            writeln!(sink, "{t}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(source: R) -> Result<Self> {
        let types = source
            .lines()
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .filter(|l| !l.is_empty())
            .collect();
        Self::from_ordered(types)
    }
}

impl TryFrom<Vec<String>> for LabelIndex {
    type Error = Error;

    fn try_from(types: Vec<String>) -> Result<Self> {
        Self::from_ordered(types)
    }
}

impl From<LabelIndex> for Vec<String> {
    fn from(index: LabelIndex) -> Self {
        index.types
    }
}

/// Collects every label of `instances` into a sorted index.
pub fn build_label_index<'a, I>(instances: I) -> Result<LabelIndex>
where
    I: IntoIterator<Item = &'a Instance>,
{
    let mut seen = 0usize;
    let mut names = BTreeSet::new();
    for inst in instances {
        seen += 1;
        names.extend(inst.labels.iter().cloned());
    }
    if seen == 0 || names.is_empty() {
        return Err(Error::Corpus(
            "no labeled instances to build a label index from".into(),
        ));
    }
    LabelIndex::from_ordered(names.into_iter().collect())
}

/// Window geometry and label handling.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    /// Tokens taken from each side of the mention.
    pub context: usize,
    /// Mention tokens kept.
    pub mention: usize,
    pub pad: String,
    /// Drop labels missing from the index instead of failing.
    pub lenient_labels: bool,
}

impl WindowSpec {
    pub fn new(context: usize, mention: usize) -> Self {
        WindowSpec {
            context,
            mention,
            pad: DEFAULT_PAD.to_string(),
            lenient_labels: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowedInstance {
    /// `l_1 .. l_C`; `l_C` is adjacent to the mention.
    pub left: Vec<String>,
    pub mention: Vec<String>,
    /// `r_1 .. r_C`; `r_1` is adjacent to the mention.
    pub right: Vec<String>,
    pub gold: Vec<u8>,
}

/// Cuts `inst` into fixed-width left context, mention and right context.
///
/// Contexts are padded on the side away from the mention; the mention is
/// truncated to its first `spec.mention` tokens or padded at the tail.
/// Returns the windowed instance and the number of labels dropped in
/// lenient mode.
pub fn window(
    inst: &Instance,
    spec: &WindowSpec,
    index: &LabelIndex,
) -> Result<(WindowedInstance, usize)> {
    if spec.context == 0 || spec.mention == 0 {
        return Err(Error::Input("window sizes must be at least 1".into()));
    }
    inst.validate()?;
    let pad = || spec.pad.clone();
    let c = spec.context;

    let before = &inst.tokens[..inst.mention_start];
    let take = before.len().min(c);
    let mut left: Vec<String> = std::iter::repeat_with(pad).take(c - take).collect();
    left.extend(before[before.len() - take..].iter().cloned());

    let after = &inst.tokens[inst.mention_end..];
    let take = after.len().min(c);
    let mut right: Vec<String> = after[..take].to_vec();
    right.extend(std::iter::repeat_with(pad).take(c - take));

    let m = inst.mention();
    let take = m.len().min(spec.mention);
    let mut mention: Vec<String> = m[..take].to_vec();
    mention.extend(std::iter::repeat_with(pad).take(spec.mention - take));

    let mut gold = vec![0u8; index.len()];
    let mut dropped = 0;
    for label in &inst.labels {
        match index.index_of(label) {
            Some(k) => gold[k] = 1,
            None if spec.lenient_labels => dropped += 1,
            None => return Err(Error::UnknownLabel(label.clone())),
        }
    }
    Ok((
        WindowedInstance {
            left,
            mention,
            right,
            gold,
        },
        dropped,
    ))
}

/// Embedded view of a window, ready for the encoders.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedInstance {
    /// `[C, D_m]`
    pub left: Tensor,
    /// `[M, D_m]`
    pub mention: Tensor,
    /// `[C, D_m]`
    pub right: Tensor,
    pub gold: Vec<f64>,
}

impl EmbeddedInstance {
    pub fn new(w: &WindowedInstance, emb: &EmbeddingTable) -> Self {
        EmbeddedInstance {
            left: emb.embed(&w.left),
            mention: emb.embed(&w.mention),
            right: emb.embed(&w.right),
            gold: w.gold.iter().map(|&g| g as f64).collect(),
        }
    }
}

/// Shuffles `0..len` and slices it into consecutive batches. The final short
/// batch is kept.
pub fn batch_indices(len: usize, batch_size: usize, rng: &mut Rng) -> Result<Vec<Vec<usize>>> {
    if len == 0 {
        return Err(Error::Corpus("cannot batch an empty corpus".into()));
    }
    if batch_size == 0 {
        return Err(Error::Input("batch size must be at least 1".into()));
    }
    let mut order: Vec<usize> = (0..len).collect();
    rng.shuffle(&mut order);
    Ok(order.chunks(batch_size).map(<[usize]>::to_vec).collect())
}

pub fn batches<'a, T>(items: &'a [T], batch_size: usize, rng: &mut Rng) -> Result<Vec<Vec<&'a T>>> {
    Ok(batch_indices(items.len(), batch_size, rng)?
        .into_iter()
        .map(|b| b.into_iter().map(|i| &items[i]).collect())
        .collect())
}
