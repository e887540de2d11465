//! Minimal reverse-mode differentiable compute over dense vectors and
//! matrices: just the operations the summarization model needs.

mod adam;
mod checkpoint;
mod gru;
mod params;
mod tape;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use gru::{gru_cell, run_bigru, run_bigru_values, Gru, States};
pub use params::{Gradients, ParamId, ParamSet};
pub use tape::{dropout, Backward, Tape, Var};
pub use tensor::Tensor;
