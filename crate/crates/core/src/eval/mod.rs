//! Corpus BLEU and paired bootstrap resampling.

mod bleu;
mod bootstrap;

use thiserror::Error;

pub use bleu::{bleu, bleu_tokens, sentence_stats, BleuOptions, BleuResult, SentenceStats, Tokenizer};
pub use bootstrap::{bootstrap_significance, bootstrap_tokens, BootstrapOptions, SignificanceResult};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{hyps} hypotheses but {refs} references")]
    LengthMismatch { hyps: usize, refs: usize },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("{0}")]
    Options(String),
}
