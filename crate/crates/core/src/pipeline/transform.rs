use std::collections::BTreeSet;
use std::sync::Arc;

use super::corpus::tokenize;
use super::PipelineError;
use crate::bpe::{desegment, desegment_lenient, BpeModel};
use crate::subchar::{DecodeMode, DecompositionTable, GranularityLevel};
use crate::symbols::{graphemes, render_passthrough, unescape, WORD_BOUNDARY};

/// Symbols of tokenized text at a level, before any BPE. Word level keeps
/// tokens whole; the other levels separate words with `▁`.
pub fn base_symbols<S: AsRef<str>>(
    tokens: &[S],
    level: GranularityLevel,
    table: Option<&DecompositionTable>,
) -> Result<Vec<String>, PipelineError> {
    match level {
        GranularityLevel::Word => Ok(tokens.iter().map(|t| t.as_ref().to_string()).collect()),
        GranularityLevel::Char | GranularityLevel::CharBpe => {
            let none = BTreeSet::new();
            let mut out = Vec::new();
            for (i, t) in tokens.iter().enumerate() {
                if i > 0 {
                    out.push(WORD_BOUNDARY.to_string());
                }
                out.extend(graphemes(t.as_ref()).into_iter().map(|g| render_passthrough(g, &none)));
            }
            Ok(out)
        }
        GranularityLevel::IdeographBpe | GranularityLevel::StrokeBpe => {
            let table = table.ok_or(PipelineError::MissingTable { level })?;
            Ok(table.encode_symbols(tokens, level.subchar().expect("sub-character level")))
        }
    }
}

/// Inverse of [`base_symbols`]. In lenient mode undecodable spans become
/// U+FFFD instead of failing.
pub fn restore_tokens<S: AsRef<str>>(
    symbols: &[S],
    level: GranularityLevel,
    table: Option<&DecompositionTable>,
    lenient: bool,
) -> Result<Vec<String>, PipelineError> {
    match level {
        GranularityLevel::Word => Ok(symbols.iter().map(|s| s.as_ref().to_string()).collect()),
        GranularityLevel::Char | GranularityLevel::CharBpe => {
            let mut words = vec![String::new()];
            for s in symbols {
                let s = s.as_ref();
                if s == WORD_BOUNDARY {
                    words.push(String::new());
                } else {
                    words.last_mut().expect("non-empty").push_str(unescape(s).unwrap_or(s));
                }
            }
            if symbols.is_empty() {
                words.clear();
            }
            Ok(words)
        }
        GranularityLevel::IdeographBpe | GranularityLevel::StrokeBpe => {
            let table = table.ok_or(PipelineError::MissingTable { level })?;
            let mode = if lenient { DecodeMode::Lenient } else { DecodeMode::Strict };
            table
                .decode_symbols(symbols, level.subchar().expect("sub-character level"), mode)
                .map_err(|e| PipelineError::Decode(e.to_string()))
        }
    }
}

/// Turns sentences of one side into model symbols and back.
#[derive(Debug, Clone)]
pub struct SideCodec {
    pub level: GranularityLevel,
    pub table: Option<Arc<DecompositionTable>>,
    pub bpe: Option<BpeModel>,
    pub char_split: bool,
}

impl SideCodec {
    pub fn new(level: GranularityLevel, table: Option<Arc<DecompositionTable>>, char_split: bool) -> Self {
        SideCodec { level, table, bpe: None, char_split }
    }

    /// Symbols before BPE.
    pub fn base(&self, sentence: &str) -> Result<Vec<String>, PipelineError> {
        base_symbols(&tokenize(sentence, self.char_split), self.level, self.table.as_deref())
    }

    /// Base symbols with BPE applied when the side has a model.
    pub fn segment(&self, base: &[String]) -> Vec<String> {
        match &self.bpe {
            Some(m) => m.apply(base),
            None => base.to_vec(),
        }
    }

    pub fn encode(&self, sentence: &str) -> Result<Vec<String>, PipelineError> {
        Ok(self.segment(&self.base(sentence)?))
    }

    /// Symbols back to tokenized text (tokens joined by single spaces).
    pub fn decode<S: AsRef<str>>(&self, symbols: &[S], lenient: bool) -> Result<String, PipelineError> {
        let base = match (&self.bpe, lenient) {
            (None, _) => symbols.iter().map(|s| s.as_ref().to_string()).collect(),
            (Some(_), true) => desegment_lenient(symbols),
            (Some(_), false) => desegment(symbols).map_err(|e| PipelineError::Decode(e.to_string()))?,
        };
        let words = restore_tokens(&base, self.level, self.table.as_deref(), lenient)?;
        Ok(words.join(" "))
    }

    /// The form of a sentence that decoding can reproduce exactly.
    pub fn normalize(&self, sentence: &str) -> String {
        tokenize(sentence, self.char_split).join(" ")
    }
}
