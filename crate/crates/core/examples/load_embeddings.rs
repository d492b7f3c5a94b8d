//! Loads a word-vector file (or a small built-in one) and shows how tokens
//! resolve: known words, the padding symbol, and unknown words via `unk`.
//!
//!     cargo run --example load_embeddings [path/to/vectors.txt]

use std::fs::File;
use std::io::BufReader;

use finet::embeddings::load_embeddings;

const SAMPLE: &str = "\
Obama 0.12 -0.40 0.33 0.05
senator 0.20 -0.31 0.29 0.11
Paris -0.52 0.08 0.14 0.40
city -0.47 0.15 0.02 0.36
senator 0.21 -0.30 0.28 0.10
";

fn main() -> finet::Result<()> {
    let (table, report) = match std::env::args().nth(1) {
        Some(path) => load_embeddings(BufReader::new(File::open(path)?), None)?,
        None => load_embeddings(SAMPLE.as_bytes(), None)?,
    };
    println!(
        "{} entries read, {} distinct, dim {}, {} duplicate(s) (last one wins), unk from {:?}",
        report.entries,
        table.len(),
        table.dim(),
        report.duplicates,
        report.unk_source
    );
    for token in ["Obama", "senator", "<pad>", "Zanzibar"] {
        println!("{token:>10} -> {:?}", table.lookup(token));
    }
    println!("checksum {}", table.checksum());
    Ok(())
}
