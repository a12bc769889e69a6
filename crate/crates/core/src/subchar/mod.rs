//! Character decomposition tables and the invertible character to
//! ideograph/stroke codec.
//!
//! Every table character is encoded as its flat unit sequence followed by an
//! end-of-character marker. The marker carries a small tag that separates
//! characters whose unit sequences are identical, which makes the encoding
//! one-to-one. Graphemes outside the table (kana, Latin letters, digits,
//! punctuation) are copied through as single units.

mod codec;
mod stats;
mod table;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use codec::DecodeMode;
pub use stats::CoverageReport;
pub use table::{CharEntry, DecompositionTable};

/// One symbol of a sub-character stream.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Unit {
    Ideograph(String),
    Stroke(String),
    /// End of one character's unit sequence, with its disambiguation tag.
    Eoc(u32),
    /// A grapheme the table does not cover.
    Passthrough(String),
    WordBoundary,
}

pub type UnitStream = Vec<Unit>;

/// Which decomposition of a character is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubcharLevel {
    Ideograph,
    Stroke,
}

impl SubcharLevel {
    pub fn unit(self, symbol: impl Into<String>) -> Unit {
        match self {
            SubcharLevel::Ideograph => Unit::Ideograph(symbol.into()),
            SubcharLevel::Stroke => Unit::Stroke(symbol.into()),
        }
    }
}

impl fmt::Display for SubcharLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SubcharLevel::Ideograph => "ideograph",
            SubcharLevel::Stroke => "stroke",
        })
    }
}

impl FromStr for SubcharLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ideograph" => Ok(SubcharLevel::Ideograph),
            "stroke" => Ok(SubcharLevel::Stroke),
            other => Err(format!("unknown sub-character level `{other}`")),
        }
    }
}

/// The unit a pipeline side is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GranularityLevel {
    /// Pre-tokenized words, no BPE.
    Word,
    /// Characters, no BPE.
    Char,
    /// Characters segmented with BPE.
    CharBpe,
    IdeographBpe,
    StrokeBpe,
}

impl GranularityLevel {
    pub const ALL: [GranularityLevel; 5] = [
        GranularityLevel::Word,
        GranularityLevel::Char,
        GranularityLevel::CharBpe,
        GranularityLevel::IdeographBpe,
        GranularityLevel::StrokeBpe,
    ];

    pub fn uses_bpe(self) -> bool {
        matches!(self, GranularityLevel::CharBpe | GranularityLevel::IdeographBpe | GranularityLevel::StrokeBpe)
    }

    /// The sub-character level backing this granularity, if any.
    pub fn subchar(self) -> Option<SubcharLevel> {
        match self {
            GranularityLevel::IdeographBpe => Some(SubcharLevel::Ideograph),
            GranularityLevel::StrokeBpe => Some(SubcharLevel::Stroke),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GranularityLevel::Word => "word",
            GranularityLevel::Char => "char",
            GranularityLevel::CharBpe => "bpe",
            GranularityLevel::IdeographBpe => "ideograph",
            GranularityLevel::StrokeBpe => "stroke",
        }
    }
}

impl fmt::Display for GranularityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GranularityLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GranularityLevel::ALL
            .into_iter()
            .find(|level| level.as_str() == s)
            .ok_or_else(|| format!("unknown granularity level `{s}` (word|char|bpe|ideograph|stroke)"))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TableError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: duplicate entry for character `{character}`")]
    Duplicate { line: usize, character: String },
    #[error("line {line}: empty {field} sequence")]
    EmptySequence { line: usize, field: &'static str },
    #[error("reading table: {0}")]
    Io(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("position {position}: unit sequence is not closed by an end-of-character marker")]
    Dangling { position: usize },
    #[error("position {position}: no character has sequence `{sequence}` with tag {tag}")]
    UnknownSequence { position: usize, sequence: String, tag: u32 },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn granularity_names_round_trip() {
        for level in GranularityLevel::ALL {
            assert_eq!(level.as_str().parse::<GranularityLevel>().unwrap(), level);
        }
        assert!("pinyin".parse::<GranularityLevel>().is_err());
        assert!(!GranularityLevel::Char.uses_bpe());
        assert_eq!(GranularityLevel::StrokeBpe.subchar(), Some(SubcharLevel::Stroke));
    }
}
