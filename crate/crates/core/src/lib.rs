//! Sub-character machine translation toolkit for logographic languages.
//!
//! * [`subchar`] decomposes characters into ideograph or stroke units and
//!   back, exactly.
//! * [`bpe`] learns and applies byte-pair merges over unit streams.
//! * [`nmt`] is a small two-layer LSTM encoder-decoder with additive
//!   attention, trained with SGD or Adam.
//! * [`eval`] scores translations with corpus BLEU and paired bootstrap
//!   resampling.
//! * [`pipeline`] ties the stages into reproducible experiments.

pub mod bpe;
pub mod eval;
pub mod nmt;
pub mod pipeline;
pub mod subchar;
pub mod symbols;
