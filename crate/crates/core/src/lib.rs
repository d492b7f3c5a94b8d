//! Fine-grained entity type classification.
//!
//! A mention is represented by the average of its word embeddings and its
//! surrounding context by one of three encoders (averaging, LSTM, or an
//! attentive bi-LSTM). The two representations are concatenated and fed to
//! a bias-free sigmoid layer that scores every type independently.
//!
//! Modules, bottom up:
//!
//! - [`numeric`]: tensors, parameter sets, seeded RNG, Adam, gradient checking
//! - [`embeddings`]: frozen pre-trained word vectors
//! - [`corpus`]: JSON-lines instances, label index, windowing, batching
//! - [`encoders`]: mention and context encoders with backward passes
//! - [`classifier`]: output layer, loss, decision rule
//! - [`model`]: the composed network
//! - [`trainer`]: mini-batch training, dropout, checkpoints
//! - [`metrics`]: strict / loose-macro / loose-micro evaluation
//! - [`synthetic`]: generated corpora for tests and examples
//! - [`cli`]: the `finet` command-line front end

pub mod classifier;
pub mod cli;
pub mod corpus;
pub mod embeddings;
pub mod encoders;
mod error;
pub mod metrics;
pub mod model;
pub mod numeric;
pub mod synthetic;
pub mod trainer;

pub use error::{Error, Result};
