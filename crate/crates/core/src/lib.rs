//! Extractive summarization of long, section-structured documents.
//!
//! Sentences are embedded by averaging word vectors, encoded with a
//! bidirectional GRU, and scored with three views of context: the sentence
//! itself, the whole document, and the section it belongs to (a span
//! representation taken as the difference of boundary hidden states).
//! Training targets come from a greedy ROUGE-1 oracle.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` / `*32` aliases below fix the precision.

pub mod corpus;
pub mod diff;
pub mod error;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod scalar;
pub mod synthetic;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Tensor64 = diff::Tensor<f64>;
pub type Tensor32 = diff::Tensor<f32>;
pub type ParamSet64 = diff::ParamSet<f64>;
pub type ParamSet32 = diff::ParamSet<f32>;
pub type EmbeddingTable64 = corpus::EmbeddingTable<f64>;
pub type EmbeddingTable32 = corpus::EmbeddingTable<f32>;
pub type Model64 = model::Model<f64>;
pub type Model32 = model::Model<f32>;
pub type WordEmbeddings64 = model::WordEmbeddings<f64>;
pub type WordEmbeddings32 = model::WordEmbeddings<f32>;
