//! Corpus handling and end-to-end experiments.

mod config;
mod corpus;
mod experiment;
mod stats;
pub mod synth;
mod transform;

use std::path::Path;

use thiserror::Error;

use crate::subchar::GranularityLevel;

pub use config::{CorpusSource, ExperimentConfig};
pub use corpus::{length_filter, tokenize, ParallelCorpus, Provenance, Split};
pub use experiment::{
    read_symbol_lines, reproduce, run_experiment, write_symbol_lines, Artifact, ExperimentReport, Manifest,
};
pub use stats::{stats_report, LevelStats, StatsReport};
pub use transform::{base_symbols, restore_tokens, SideCodec};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config line {line}: {reason}")]
    ConfigSyntax { line: usize, reason: String },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("line count mismatch: {src} source lines, {tgt} target lines")]
    CountMismatch { src: usize, tgt: usize },
    #[error("{path}: line {line} is not valid UTF-8")]
    Encoding { path: String, line: usize },
    #[error("{path}: line {line} is not a tab-separated pair")]
    TsvFormat { path: String, line: usize },
    #[error("corpus of {size} pairs is too small for {dev} dev and {test} test pairs")]
    TooSmall { size: usize, dev: usize, test: usize },
    #[error("level `{level}` needs a decomposition table")]
    MissingTable { level: GranularityLevel },
    #[error("decode: {0}")]
    Decode(String),
    #[error("bpe: {0}")]
    Bpe(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
}

impl PipelineError {
    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        PipelineError::Io { path: path.display().to_string(), message: e.to_string() }
    }

    /// Name of the failing stage, for errors raised by [`run_experiment`].
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            PipelineError::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}
