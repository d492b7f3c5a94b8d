#![allow(dead_code)]

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use finet::corpus::{write_corpus, Instance};
use finet::embeddings::{write_embeddings, EmbeddingTable};

pub fn write_instances(path: &Path, instances: &[Instance]) -> PathBuf {
    write_corpus(BufWriter::new(File::create(path).unwrap()), instances).unwrap();
    path.to_path_buf()
}

pub fn write_table(path: &Path, table: &EmbeddingTable) -> PathBuf {
    write_embeddings(table, BufWriter::new(File::create(path).unwrap())).unwrap();
    path.to_path_buf()
}
