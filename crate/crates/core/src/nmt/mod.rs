//! Two-layer LSTM encoder-decoder with additive attention.
//!
//! Everything runs in `f64` on the CPU. Gradients are exact reverse-mode
//! derivatives of [`forward`]; [`grad_check`] compares them with central
//! finite differences.

mod attention;
mod checkpoint;
mod decode;
mod gradcheck;
mod lstm;
mod model;
mod network;
mod train;
mod vocab;

use thiserror::Error;

pub use attention::attention_weights;
pub use checkpoint::Checkpoint;
pub use decode::{translate, DecodeMode};
pub use gradcheck::{grad_check, GradCheckReport};
pub use lstm::FORGET_BIAS;
pub use model::{AttentionKind, Dims, LstmParams, Seq2SeqModel, INIT_SCALE};
pub use network::{backward, forward, Cache, Dropout, Example, ForwardOutput};
pub use train::{batch_gradient, evaluate, train, LossPoint, Optimizer, TrainConfig, TrainReport};
pub use vocab::{Vocab, BOS, EOS, PAD, RESERVED, UNK};

#[derive(Debug, Error)]
pub enum NmtError {
    #[error("vocabulary: {0}")]
    Vocab(String),
    #[error("shape: {0}")]
    Shape(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("id {id} out of range for vocabulary of size {size}")]
    IdOutOfRange { id: usize, size: usize },
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("training diverged at step {step}: loss {loss}")]
    Divergence { step: usize, loss: f64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("i/o: {0}")]
    Io(String),
}
