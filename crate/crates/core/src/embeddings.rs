//! Frozen pre-trained word embeddings.
//!
//! The text format is one entry per line, `token v_1 ... v_D`, separated by
//! single spaces and with no header. Lookups are case-sensitive. The padding
//! symbol maps to the zero vector; any other unseen token maps to the `unk`
//! vector, which is read from the entry literally spelled `unk` or, when the
//! file has none, set to the mean of all loaded vectors.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numeric::Tensor;

pub const DEFAULT_PAD: &str = "<pad>";
pub const UNK_TOKEN: &str = "unk";

/// How the `unk` vector was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnkSource {
    FromFile,
    MeanOfVectors,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoadReport {
    pub entries: usize,
    pub duplicates: usize,
    pub unk_source: UnkSource,
}

#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    dim: usize,
    pad_symbol: String,
    index: HashMap<String, usize>,
    /// Row-major `[n, dim]` storage.
    vectors: Vec<f64>,
    unk: Vec<f64>,
    pad: Vec<f64>,
}

impl EmbeddingTable {
    /// Builds a table from in-memory entries. Later duplicates win.
    pub fn from_entries<I>(dim: usize, entries: I) -> Result<(Self, LoadReport)>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        let mut builder = Builder::new(Some(dim));
        for (line, (token, vector)) in entries.into_iter().enumerate() {
            builder.push(line + 1, token, vector)?;
        }
        builder.finish()
    }

    pub fn with_pad_symbol(mut self, pad: impl Into<String>) -> Self {
        self.pad_symbol = pad.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn pad_symbol(&self) -> &str {
        &self.pad_symbol
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn unk_vector(&self) -> &[f64] {
        &self.unk
    }

    /// Padding → zeros, known token → its vector, anything else → `unk`.
    pub fn lookup(&self, token: &str) -> &[f64] {
        if token == self.pad_symbol {
            return &self.pad;
        }
        match self.index.get(token) {
            Some(&row) => &self.vectors[row * self.dim..(row + 1) * self.dim],
            None => &self.unk,
        }
    }

    pub fn lookup_tensor(&self, token: &str) -> Tensor {
        Tensor::from_vec(self.lookup(token).to_vec())
    }

    /// Embeds a token sequence into a `[tokens.len(), dim]` matrix.
    pub fn embed<S: AsRef<str>>(&self, tokens: &[S]) -> Tensor {
        let mut data = Vec::with_capacity(tokens.len() * self.dim);
        for t in tokens {
            data.extend_from_slice(self.lookup(t.as_ref()));
        }
        Tensor::new(vec![tokens.len(), self.dim], data).expect("non-empty token window")
    }

    /// Entries in vocabulary order, without padding and the fallback `unk`.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &[f64])> {
        let mut tokens: Vec<(&String, &usize)> = self.index.iter().collect();
        tokens.sort();
        tokens.into_iter().map(|(t, &row)| {
            (
                t.as_str(),
                &self.vectors[row * self.dim..(row + 1) * self.dim],
            )
        })
    }

    /// SHA-256 over the sorted vocabulary, all vectors, `unk` and padding.
    pub fn checksum(&self) -> String {
        let mut tokens: Vec<(&String, &usize)> = self.index.iter().collect();
        tokens.sort();
        let mut h = Sha256::new();
        h.update((self.dim as u64).to_le_bytes());
        for (token, &row) in tokens {
            h.update(token.as_bytes());
            h.update([0u8]);
            for v in &self.vectors[row * self.dim..(row + 1) * self.dim] {
                h.update(v.to_le_bytes());
            }
        }
        for v in self.unk.iter().chain(&self.pad) {
            h.update(v.to_le_bytes());
        }
        h.update(self.pad_symbol.as_bytes());
        hex::encode(h.finalize())
    }
}

/// Writes `table` in the text format read by [`load_embeddings`]. Values
/// use the shortest representation that parses back to the same `f64`.
pub fn write_embeddings<W: Write>(table: &EmbeddingTable, mut sink: W) -> Result<()> {
    for (token, v) in table.entries() {
        write!(sink, "{token}")?;
        for x in v {
            write!(sink, " {x}")?;
        }
        writeln!(sink)?;
    }
    Ok(())
}

/// Reads the text embedding format from `source`.
///
/// The dimension is taken from the first line unless `expected_dim` is given,
/// in which case every line must match it.
pub fn load_embeddings<R: BufRead>(
    source: R,
    expected_dim: Option<usize>,
) -> Result<(EmbeddingTable, LoadReport)> {
    let mut builder = Builder::new(expected_dim);
    for (i, line) in source.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(' ').filter(|f| !f.is_empty());
        let token = fields.next().expect("non-empty line").to_string();
        let vector = fields
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line: line_no,
                        msg: format!("unparseable number `{f}`"),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        builder.push(line_no, token, vector)?;
    }
    builder.finish()
}

struct Builder {
    dim: Option<usize>,
    index: HashMap<String, usize>,
    vectors: Vec<f64>,
    duplicates: usize,
}

impl Builder {
    fn new(dim: Option<usize>) -> Self {
        Builder {
            dim,
            index: HashMap::new(),
            vectors: Vec::new(),
            duplicates: 0,
        }
    }

    fn push(&mut self, line: usize, token: String, vector: Vec<f64>) -> Result<()> {
        if vector.is_empty() {
            return Err(Error::Parse {
                line,
                msg: format!("token `{token}` has no vector"),
            });
        }
        let dim = *self.dim.get_or_insert(vector.len());
        if vector.len() != dim {
            return Err(Error::Parse {
                line,
                msg: format!("expected {dim} values, found {}", vector.len()),
            });
        }
        if let Some(&row) = self.index.get(&token) {
            self.duplicates += 1;
            self.vectors[row * dim..(row + 1) * dim].copy_from_slice(&vector);
        } else {
            self.index.insert(token, self.index.len());
            self.vectors.extend(vector);
        }
        Ok(())
    }

    fn finish(self) -> Result<(EmbeddingTable, LoadReport)> {
        let dim = match self.dim {
            Some(d) if !self.index.is_empty() => d,
            _ => {
                return Err(Error::Parse {
                    line: 0,
                    msg: "no embedding entries".into(),
                })
            }
        };
        let n = self.index.len();
        let (unk, unk_source) = match self.index.get(UNK_TOKEN) {
            Some(&row) => (
                self.vectors[row * dim..(row + 1) * dim].to_vec(),
                UnkSource::FromFile,
            ),
            None => {
                let mut mean = vec![0.0; dim];
                for row in self.vectors.chunks_exact(dim) {
                    for (m, v) in mean.iter_mut().zip(row) {
                        *m += v;
                    }
                }
                mean.iter_mut().for_each(|m| *m /= n as f64);
                (mean, UnkSource::MeanOfVectors)
            }
        };
        let report = LoadReport {
            entries: n,
            duplicates: self.duplicates,
            unk_source,
        };
        let table = EmbeddingTable {
            dim,
            pad_symbol: DEFAULT_PAD.to_string(),
            index: self.index,
            vectors: self.vectors,
            unk,
            pad: vec![0.0; dim],
        };
        Ok((table, report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<(EmbeddingTable, LoadReport)> {
        load_embeddings(text.as_bytes(), None)
    }

    #[test]
    fn write_then_load_round_trips() {
        let (t, _) = load("b 0.1 -2.5\nunk 1e-7 3\na 0.30000000000000004 7\n").unwrap();
        let mut buf = Vec::new();
        write_embeddings(&t, &mut buf).unwrap();
        let (back, report) = load_embeddings(buf.as_slice(), Some(2)).unwrap();
        assert_eq!(report.unk_source, UnkSource::FromFile);
        assert_eq!(back.checksum(), t.checksum());
    }

    #[test]
    fn reads_back_vectors() {
        let (t, _) = load("a 1 0\nb 0 1\n").unwrap();
        assert_eq!(t.dim(), 2);
        assert_eq!(t.lookup("a"), &[1.0, 0.0]);
        assert_eq!(t.lookup("b"), &[0.0, 1.0]);
    }

    #[test]
    fn unk_defaults_to_mean() {
        let (t, r) = load("a 1 0\nb 0 1\n").unwrap();
        assert_eq!(t.unk_vector(), &[0.5, 0.5]);
        assert_eq!(r.unk_source, UnkSource::MeanOfVectors);
        assert_eq!(t.lookup("zzzqq"), &[0.5, 0.5]);
    }

    #[test]
    fn unk_from_file_and_literal_unk_is_a_vocabulary_hit() {
        let (t, r) = load("a 1 0\nunk 3 4\n").unwrap();
        assert_eq!(r.unk_source, UnkSource::FromFile);
        assert_eq!(t.lookup("unk"), &[3.0, 4.0]);
        assert_eq!(t.lookup("never-seen"), &[3.0, 4.0]);
    }

    #[test]
    fn padding_is_zero() {
        let (t, _) = load("a 1 2 3\n").unwrap();
        assert_eq!(t.lookup(DEFAULT_PAD), &[0.0, 0.0, 0.0]);
        let t = t.with_pad_symbol("__PAD__");
        assert_eq!(t.lookup("__PAD__"), &[0.0, 0.0, 0.0]);
        // The old symbol is now an ordinary unknown word.
        assert_eq!(t.lookup(DEFAULT_PAD), t.unk_vector());
    }

    #[test]
    fn inconsistent_dimension_reports_line() {
        let err = load("a 1 0\nb 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = load_embeddings("a 1 0\n".as_bytes(), Some(3)).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn bad_number_reports_line() {
        let err = load("a 1 0\nb 0 x1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(load("a 1 nan\n").is_err());
    }

    #[test]
    fn duplicates_last_wins() {
        let (t, r) = load("a 1 0\na 5 5\n").unwrap();
        assert_eq!(r.duplicates, 1);
        assert_eq!(t.len(), 1);
        assert_eq!(t.lookup("a"), &[5.0, 5.0]);
    }

    #[test]
    fn lookup_is_case_sensitive() {
        let (t, _) = load("Apple 1 0\nunk 0 0\n").unwrap();
        assert_eq!(t.lookup("Apple"), &[1.0, 0.0]);
        assert_eq!(t.lookup("apple"), &[0.0, 0.0]);
    }

    #[test]
    fn checksum_tracks_contents() {
        let (a, _) = load("a 1 0\nb 0 1\n").unwrap();
        let (b, _) = load("b 0 1\na 1 0\n").unwrap();
        let (c, _) = load("a 1 0\nb 0 1.5\n").unwrap();
        assert_eq!(a.checksum(), b.checksum());
        assert_ne!(a.checksum(), c.checksum());
    }

    #[test]
    fn embed_stacks_rows() {
        let (t, _) = load("a 1 0\nb 0 1\n").unwrap();
        let m = t.embed(&["a", DEFAULT_PAD, "b"]);
        assert_eq!(m.shape(), &[3, 2]);
        assert_eq!(m.data(), &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    }
}
