use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::NmtError;

pub const PAD: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;
pub const UNK: usize = 3;

/// Spellings of the reserved ids, in id order.
pub const RESERVED: [&str; 4] = ["<pad>", "<s>", "</s>", "<unk>"];

/// Symbol <-> id bijection. Ids 0..4 are reserved for padding,
/// begin-of-sentence, end-of-sentence and unknown symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    symbols: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Builds a vocabulary from symbol streams, most frequent first (ties in
    /// lexicographic order). `max_size` counts the reserved ids.
    pub fn build<S: AsRef<str>>(corpus: &[&[Vec<S>]], max_size: Option<usize>) -> Self {
        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        for part in corpus {
            for stream in part.iter() {
                for s in stream {
                    *counts.entry(s.as_ref()).or_insert(0) += 1;
                }
            }
        }
        let mut ranked: Vec<(&str, u64)> = counts.into_iter().filter(|(s, _)| !RESERVED.contains(s)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let limit = max_size.map_or(usize::MAX, |m| m.saturating_sub(RESERVED.len()));
        Self::from_symbols(ranked.into_iter().take(limit).map(|(s, _)| s.to_string()))
            .expect("ranked symbols are distinct")
    }

    /// Vocabulary with the reserved ids followed by `symbols`.
    pub fn from_symbols(symbols: impl IntoIterator<Item = String>) -> Result<Self, NmtError> {
        let mut vocab = Vocab { symbols: Vec::new(), index: HashMap::new() };
        for s in RESERVED.iter().map(|s| s.to_string()).chain(symbols) {
            if vocab.index.insert(s.clone(), vocab.symbols.len()).is_some() {
                return Err(NmtError::Vocab(format!("duplicate symbol `{s}`")));
            }
            vocab.symbols.push(s);
        }
        Ok(vocab)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn id(&self, symbol: &str) -> usize {
        self.index.get(symbol).copied().unwrap_or(UNK)
    }

    pub fn symbol(&self, id: usize) -> &str {
        self.symbols.get(id).map_or(RESERVED[UNK], String::as_str)
    }

    pub fn encode<S: AsRef<str>>(&self, symbols: &[S]) -> Vec<usize> {
        symbols.iter().map(|s| self.id(s.as_ref())).collect()
    }

    /// Symbols for `ids`, stopping at end-of-sentence and skipping padding
    /// and begin markers.
    pub fn decode(&self, ids: &[usize]) -> Vec<String> {
        ids.iter()
            .take_while(|&&id| id != EOS)
            .filter(|&&id| id != PAD && id != BOS)
            .map(|&id| self.symbol(id).to_string())
            .collect()
    }

    /// Non-reserved symbols in id order.
    pub fn symbols(&self) -> &[String] {
        &self.symbols[RESERVED.len()..]
    }

    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for s in &self.symbols {
            hasher.update(s.as_bytes());
            hasher.update([0u8]);
        }
        hex::encode(hasher.finalize())
    }

    /// One symbol per line, reserved ids omitted.
    pub fn to_text(&self) -> String {
        self.symbols().iter().map(|s| format!("{s}\n")).collect()
    }

    pub fn from_text(text: &str) -> Result<Self, NmtError> {
        Self::from_symbols(text.lines().filter(|l| !l.is_empty()).map(str::to_string))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NmtError> {
        std::fs::write(path, self.to_text()).map_err(|e| NmtError::Io(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NmtError> {
        let text = std::fs::read_to_string(path).map_err(|e| NmtError::Io(e.to_string()))?;
        Self::from_text(&text)
    }
}
