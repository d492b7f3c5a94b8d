//! Checkpoint container.
//!
//! Layout:
//!
//! ```text
//! FINET-CHECKPOINT\n
//! <one line of JSON: version, config, dims, labels, history, tensor manifest>\n
//! <tensor payloads: row-major little-endian f64, in manifest order>
//! ```
//!
//! Each manifest entry carries the tensor name, shape, dtype (`f64-le`),
//! byte offset into the payload and element count.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::LabelIndex;
use crate::error::{Error, Result};
use crate::model::{validate_params, Model, ModelDims};
use crate::numeric::{ParamSet, Tensor};

use super::{HistoryRow, TrainConfig};

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &str = "FINET-CHECKPOINT";
const DTYPE: &str = "f64-le";

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub labels: LabelIndex,
    pub dims: ModelDims,
    pub params: ParamSet,
    /// Pass after which these parameters were taken.
    pub passes: usize,
    pub history: Vec<HistoryRow>,
}

impl Checkpoint {
    pub fn model(&self) -> Result<Model> {
        Model::from_params(self.config.encoder, self.dims, self.params.clone())
    }
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    dtype: String,
    offset: usize,
    len: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    config: TrainConfig,
    dims: ModelDims,
    labels: LabelIndex,
    passes: usize,
    history: Vec<HistoryRow>,
    tensors: Vec<TensorEntry>,
}

pub fn save_checkpoint<W: Write>(ckpt: &Checkpoint, mut sink: W) -> Result<()> {
    let mut offset = 0;
    let tensors = ckpt
        .params
        .iter()
        .map(|(name, t)| {
            let e = TensorEntry {
                name: name.to_string(),
                shape: t.shape().to_vec(),
                dtype: DTYPE.to_string(),
                offset,
                len: t.len(),
            };
            offset += 8 * t.len();
            e
        })
        .collect();
    let header = Header {
        version: CHECKPOINT_VERSION,
        config: ckpt.config.clone(),
        dims: ckpt.dims,
        labels: ckpt.labels.clone(),
        passes: ckpt.passes,
        history: ckpt.history.clone(),
        tensors,
    };
    writeln!(sink, "{MAGIC}")?;
    serde_json::to_writer(&mut sink, &header).map_err(std::io::Error::from)?;
    sink.write_all(b"\n")?;
    for (_, t) in ckpt.params.iter() {
        let mut buf = Vec::with_capacity(8 * t.len());
        for v in t.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        sink.write_all(&buf)?;
    }
    sink.flush()?;
    Ok(())
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

pub fn load_checkpoint<R: BufRead>(mut source: R) -> Result<Checkpoint> {
    let mut magic = String::new();
    source.read_line(&mut magic)?;
    if magic.trim_end() != MAGIC {
        return Err(bad("not a checkpoint file"));
    }
    let mut line = String::new();
    source.read_line(&mut line)?;
    let header: Header = serde_json::from_str(line.trim_end())
        .map_err(|e| bad(format!("unreadable header: {e}")))?;
    if header.version != CHECKPOINT_VERSION {
        return Err(bad(format!(
            "version mismatch: file has {}, expected {CHECKPOINT_VERSION}",
            header.version
        )));
    }
    if header.dims.types != header.labels.len() {
        return Err(bad(format!(
            "shape mismatch: {} types declared, {} labels stored",
            header.dims.types,
            header.labels.len()
        )));
    }

    let mut payload = Vec::new();
    source.read_to_end(&mut payload)?;
    let mut params = ParamSet::new();
    let mut expected_offset = 0;
    for e in &header.tensors {
        if e.dtype != DTYPE {
            return Err(bad(format!(
                "tensor `{}` has unsupported dtype `{}`",
                e.name, e.dtype
            )));
        }
        let n: usize = e.shape.iter().product();
        if n != e.len || e.offset != expected_offset {
            return Err(bad(format!(
                "shape mismatch for `{}`: shape {:?} vs length {} at offset {}",
                e.name, e.shape, e.len, e.offset
            )));
        }
        let end = e.offset + 8 * e.len;
        let bytes = payload.get(e.offset..end).ok_or_else(|| {
            bad(format!(
                "shape mismatch for `{}`: payload ends at byte {}, tensor needs {}",
                e.name,
                payload.len(),
                end
            ))
        })?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        params.insert(e.name.clone(), Tensor::new(e.shape.clone(), data)?);
        expected_offset = end;
    }
    if expected_offset != payload.len() {
        return Err(bad(format!(
            "shape mismatch: {} trailing payload bytes",
            payload.len() - expected_offset
        )));
    }
    validate_params(header.config.encoder, &header.dims, &params)
        .map_err(|e| bad(format!("shape mismatch vs declared config: {e}")))?;

    Ok(Checkpoint {
        config: header.config,
        labels: header.labels,
        dims: header.dims,
        params,
        passes: header.passes,
        history: header.history,
    })
}
