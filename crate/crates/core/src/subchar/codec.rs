use super::{DecodeError, DecompositionTable, SubcharLevel, Unit, UnitStream};
use crate::symbols::{eoc_token, graphemes, parse_eoc, render_passthrough, unescape, UNKNOWN_GRAPHEME, WORD_BOUNDARY};

/// How [`DecompositionTable::decode_text`] treats undecodable spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecodeMode {
    /// Fail on the first undecodable span.
    #[default]
    Strict,
    /// Replace each undecodable span with [`UNKNOWN_GRAPHEME`].
    Lenient,
}

impl DecompositionTable {
    /// Units of one grapheme: its decomposition plus an end-of-character
    /// marker, or a single passthrough unit when the table lacks it.
    pub fn decompose_char(&self, grapheme: &str, level: SubcharLevel) -> Vec<Unit> {
        match self.get(grapheme) {
            Some(entry) => entry
                .units(level)
                .iter()
                .map(|u| level.unit(u.as_str()))
                .chain(std::iter::once(Unit::Eoc(entry.tag(level))))
                .collect(),
            None => vec![Unit::Passthrough(grapheme.to_string())],
        }
    }

    /// Encodes pre-tokenized words, separating them with word boundaries.
    /// Words are expected to be non-empty.
    pub fn encode_text<S: AsRef<str>>(&self, tokens: &[S], level: SubcharLevel) -> UnitStream {
        let mut stream = Vec::new();
        for (i, token) in tokens.iter().enumerate() {
            if i > 0 {
                stream.push(Unit::WordBoundary);
            }
            for g in graphemes(token.as_ref()) {
                stream.extend(self.decompose_char(g, level));
            }
        }
        stream
    }

    /// Inverse of [`encode_text`](Self::encode_text).
    pub fn decode_text(
        &self,
        stream: &[Unit],
        level: SubcharLevel,
        mode: DecodeMode,
    ) -> Result<Vec<String>, DecodeError> {
        let mut words = Vec::new();
        if stream.is_empty() {
            return Ok(words);
        }
        let mut word = String::new();
        let mut pending: Vec<String> = Vec::new();
        let mut pending_start = 0;

        let flush_dangling = |pending: &mut Vec<String>, word: &mut String, start: usize| {
            if pending.is_empty() {
                return Ok(());
            }
            match mode {
                DecodeMode::Strict => Err(DecodeError::Dangling { position: start }),
                DecodeMode::Lenient => {
                    pending.clear();
                    word.push_str(UNKNOWN_GRAPHEME);
                    Ok(())
                }
            }
        };

        for (pos, unit) in stream.iter().enumerate() {
            match unit {
                Unit::Ideograph(s) | Unit::Stroke(s) => {
                    if pending.is_empty() {
                        pending_start = pos;
                    }
                    pending.push(s.clone());
                }
                Unit::Eoc(tag) => {
                    match self.lookup(level, &pending, *tag) {
                        Some(c) if !pending.is_empty() => word.push_str(c),
                        _ => match mode {
                            DecodeMode::Strict => {
                                return Err(DecodeError::UnknownSequence {
                                    position: if pending.is_empty() { pos } else { pending_start },
                                    sequence: pending.join(" "),
                                    tag: *tag,
                                })
                            }
                            DecodeMode::Lenient => word.push_str(UNKNOWN_GRAPHEME),
                        },
                    }
                    pending.clear();
                }
                Unit::Passthrough(s) => {
                    flush_dangling(&mut pending, &mut word, pending_start)?;
                    word.push_str(s);
                }
                Unit::WordBoundary => {
                    flush_dangling(&mut pending, &mut word, pending_start)?;
                    words.push(std::mem::take(&mut word));
                }
            }
        }
        flush_dangling(&mut pending, &mut word, pending_start)?;
        words.push(word);
        Ok(words)
    }

    /// Renders a unit stream as space-free symbols.
    pub fn to_symbols(&self, stream: &[Unit], level: SubcharLevel) -> Vec<String> {
        let inventory = self.inventory(level);
        stream
            .iter()
            .map(|unit| match unit {
                Unit::Ideograph(s) | Unit::Stroke(s) => s.clone(),
                Unit::Eoc(tag) => eoc_token(*tag),
                Unit::Passthrough(s) => render_passthrough(s, inventory),
                Unit::WordBoundary => WORD_BOUNDARY.to_string(),
            })
            .collect()
    }

    /// Reads rendered symbols back into typed units. Symbols in the level's
    /// inventory become units; anything else is a passthrough.
    pub fn from_symbols<S: AsRef<str>>(&self, symbols: &[S], level: SubcharLevel) -> UnitStream {
        let inventory = self.inventory(level);
        symbols
            .iter()
            .map(|s| {
                let s = s.as_ref();
                if s == WORD_BOUNDARY {
                    Unit::WordBoundary
                } else if let Some(tag) = parse_eoc(s) {
                    Unit::Eoc(tag)
                } else if let Some(raw) = unescape(s) {
                    Unit::Passthrough(raw.to_string())
                } else if inventory.contains(s) {
                    level.unit(s)
                } else {
                    Unit::Passthrough(s.to_string())
                }
            })
            .collect()
    }

    /// Encodes straight to rendered symbols.
    pub fn encode_symbols<S: AsRef<str>>(&self, tokens: &[S], level: SubcharLevel) -> Vec<String> {
        self.to_symbols(&self.encode_text(tokens, level), level)
    }

    /// Decodes rendered symbols.
    pub fn decode_symbols<S: AsRef<str>>(
        &self,
        symbols: &[S],
        level: SubcharLevel,
        mode: DecodeMode,
    ) -> Result<Vec<String>, DecodeError> {
        self.decode_text(&self.from_symbols(symbols, level), level, mode)
    }
}
