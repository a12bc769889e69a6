//! Byte-pair encoding over unit streams.
//!
//! Streams are lists of atomic symbols (see [`crate::symbols`]) with words
//! separated by `▁`. Training repeatedly merges the most frequent adjacent
//! pair inside words, breaking ties by the lexicographic order of the pair,
//! until the vocabulary (base symbols plus merge products) reaches the target
//! size or no pair occurs at least twice. A pair whose concatenation already
//! names a vocabulary symbol is never merged, so each merge adds exactly one
//! symbol.
//!
//! Applying a model marks every piece except the last of each word with a
//! trailing `@@`; [`desegment`] removes the markers and splits merged pieces
//! back into atomic units.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::symbols::{is_atomic, split_atomic, CONTINUATION, WORD_BOUNDARY};

/// Merges below this count are not learned.
pub const MIN_PAIR_FREQUENCY: u64 = 2;

const HEADER_TAG: &str = "#bpe";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BpeError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("target vocabulary {target} is below the base alphabet size {alphabet}")]
    TargetBelowAlphabet { target: usize, alphabet: usize },
    #[error("symbol `{0}` is not an atomic unit")]
    NonAtomicSymbol(String),
    #[error("position {position}: continuation marker not followed by a piece of the same word")]
    DanglingContinuation { position: usize },
    #[error("model file line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("model file: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MergeRule {
    pub left: String,
    pub right: String,
    pub merged: String,
    pub rank: usize,
}

/// Ordered merge rules and the alphabet they were learned over.
#[derive(Debug, Clone)]
pub struct BpeModel {
    rules: Vec<MergeRule>,
    base_symbols: BTreeSet<String>,
    vocab_size_target: usize,
    ranks: HashMap<(String, String), usize>,
    /// Symbol counts over the segmented training corpus. Empty for models
    /// read from disk.
    frequencies: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VocabEntry {
    pub symbol: String,
    pub merged: bool,
    pub frequency: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VocabReport {
    pub base_count: usize,
    pub merged_count: usize,
    pub entries: Vec<VocabEntry>,
}

impl VocabReport {
    pub fn vocab_size(&self) -> usize {
        self.base_count + self.merged_count
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("symbol,kind,frequency\n");
        for e in &self.entries {
            let kind = if e.merged { "merged" } else { "base" };
            let _ = writeln!(out, "{},{},{}", csv_field(&e.symbol), kind, e.frequency);
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Splits a stream into its words. Consecutive boundaries yield empty words.
pub fn words<S: AsRef<str>>(stream: &[S]) -> Vec<&[S]> {
    stream.split(|s| s.as_ref() == WORD_BOUNDARY).collect()
}

struct Trainer {
    symbols: Vec<String>,
    ids: HashMap<String, u32>,
    words: Vec<Vec<u32>>,
    counts: Vec<u64>,
    pair_counts: HashMap<(u32, u32), u64>,
    occurs_in: HashMap<(u32, u32), BTreeSet<usize>>,
}

impl Trainer {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.symbols.len() as u32;
        self.symbols.push(s.to_string());
        self.ids.insert(s.to_string(), id);
        id
    }

    fn add_pairs(&mut self, idx: usize) {
        let count = self.counts[idx];
        for w in self.words[idx].windows(2) {
            let pair = (w[0], w[1]);
            *self.pair_counts.entry(pair).or_insert(0) += count;
            self.occurs_in.entry(pair).or_default().insert(idx);
        }
    }

    fn remove_pairs(&mut self, idx: usize) {
        let count = self.counts[idx];
        for w in self.words[idx].windows(2) {
            let pair = (w[0], w[1]);
            if let Some(c) = self.pair_counts.get_mut(&pair) {
                *c -= count;
                if *c == 0 {
                    self.pair_counts.remove(&pair);
                }
            }
            if let Some(set) = self.occurs_in.get_mut(&pair) {
                set.remove(&idx);
                if set.is_empty() {
                    self.occurs_in.remove(&pair);
                }
            }
        }
    }

    fn best_pair(&self, blocked: &BTreeSet<(u32, u32)>) -> Option<((u32, u32), u64)> {
        let mut best: Option<((u32, u32), u64)> = None;
        for (&pair, &count) in &self.pair_counts {
            if blocked.contains(&pair) {
                continue;
            }
            let better = match best {
                None => true,
                Some((bp, bc)) => {
                    count > bc
                        || (count == bc
                            && (self.symbols[pair.0 as usize].as_str(), self.symbols[pair.1 as usize].as_str())
                                < (self.symbols[bp.0 as usize].as_str(), self.symbols[bp.1 as usize].as_str()))
                }
            };
            if better {
                best = Some((pair, count));
            }
        }
        best
    }
}

fn merge_word<T: PartialEq + Clone>(word: &[T], left: &T, right: &T, merged: &T) -> Vec<T> {
    let mut out = Vec::with_capacity(word.len());
    let mut i = 0;
    while i < word.len() {
        if i + 1 < word.len() && word[i] == *left && word[i + 1] == *right {
            out.push(merged.clone());
            i += 2;
        } else {
            out.push(word[i].clone());
            i += 1;
        }
    }
    out
}

impl BpeModel {
    /// Learns merges until the vocabulary holds `target_vocab` symbols.
    pub fn train<S: AsRef<str>>(corpus: &[Vec<S>], target_vocab: usize) -> Result<Self, BpeError> {
        let mut word_counts: BTreeMap<Vec<&str>, u64> = BTreeMap::new();
        for stream in corpus {
            for word in words(stream) {
                if !word.is_empty() {
                    *word_counts.entry(word.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
                }
            }
        }
        if word_counts.is_empty() {
            return Err(BpeError::EmptyCorpus);
        }

        let mut trainer = Trainer {
            symbols: Vec::new(),
            ids: HashMap::new(),
            words: Vec::new(),
            counts: Vec::new(),
            pair_counts: HashMap::new(),
            occurs_in: HashMap::new(),
        };
        let mut base_symbols = BTreeSet::new();
        for (word, count) in &word_counts {
            let mut ids = Vec::with_capacity(word.len());
            for &s in word {
                if !base_symbols.contains(s) {
                    if !is_atomic(s) || s == "@" {
                        return Err(BpeError::NonAtomicSymbol(s.to_string()));
                    }
                    base_symbols.insert(s.to_string());
                }
                ids.push(trainer.intern(s));
            }
            trainer.words.push(ids);
            trainer.counts.push(*count);
        }
        if target_vocab < base_symbols.len() {
            return Err(BpeError::TargetBelowAlphabet { target: target_vocab, alphabet: base_symbols.len() });
        }
        for idx in 0..trainer.words.len() {
            trainer.add_pairs(idx);
        }

        let mut rules = Vec::new();
        let mut blocked = BTreeSet::new();
        while base_symbols.len() + rules.len() < target_vocab {
            let Some((pair, count)) = trainer.best_pair(&blocked) else { break };
            if count < MIN_PAIR_FREQUENCY {
                break;
            }
            let left = trainer.symbols[pair.0 as usize].clone();
            let right = trainer.symbols[pair.1 as usize].clone();
            let merged = format!("{left}{right}");
            if trainer.ids.contains_key(&merged) {
                blocked.insert(pair);
                continue;
            }
            let merged_id = trainer.intern(&merged);
            let affected: Vec<usize> =
                trainer.occurs_in.get(&pair).map(|s| s.iter().copied().collect()).unwrap_or_default();
            for idx in affected {
                trainer.remove_pairs(idx);
                trainer.words[idx] = merge_word(&trainer.words[idx], &pair.0, &pair.1, &merged_id);
                trainer.add_pairs(idx);
            }
            rules.push(MergeRule { left, right, merged, rank: rules.len() });
        }

        let mut frequencies = BTreeMap::new();
        for (word, &count) in trainer.words.iter().zip(&trainer.counts) {
            for &id in word {
                *frequencies.entry(trainer.symbols[id as usize].clone()).or_insert(0) += count;
            }
        }
        log::debug!("bpe: {} base symbols, {} merges", base_symbols.len(), rules.len());
        Ok(Self::from_parts(rules, base_symbols, target_vocab, frequencies))
    }

    /// Trains one model on the concatenation of both corpora.
    pub fn train_shared<S: AsRef<str> + Clone>(
        src: &[Vec<S>],
        tgt: &[Vec<S>],
        target_vocab: usize,
    ) -> Result<Self, BpeError> {
        let joined: Vec<Vec<S>> = src.iter().chain(tgt).cloned().collect();
        Self::train(&joined, target_vocab)
    }

    fn from_parts(
        rules: Vec<MergeRule>,
        base_symbols: BTreeSet<String>,
        vocab_size_target: usize,
        frequencies: BTreeMap<String, u64>,
    ) -> Self {
        let ranks = rules.iter().map(|r| ((r.left.clone(), r.right.clone()), r.rank)).collect();
        BpeModel { rules, base_symbols, vocab_size_target, ranks, frequencies }
    }

    pub fn rules(&self) -> &[MergeRule] {
        &self.rules
    }

    pub fn base_symbols(&self) -> &BTreeSet<String> {
        &self.base_symbols
    }

    pub fn vocab_size_target(&self) -> usize {
        self.vocab_size_target
    }

    /// Base symbols followed by merge products in rank order.
    pub fn vocabulary(&self) -> Vec<String> {
        self.base_symbols.iter().cloned().chain(self.rules.iter().map(|r| r.merged.clone())).collect()
    }

    /// Segments one word into pieces (without continuation markers).
    pub fn segment_word<S: AsRef<str>>(&self, word: &[S]) -> Vec<String> {
        let mut pieces: Vec<String> = word.iter().map(|s| s.as_ref().to_string()).collect();
        loop {
            let best = pieces.windows(2).filter_map(|w| self.ranks.get(&(w[0].clone(), w[1].clone())).copied()).min();
            let Some(rank) = best else { break };
            let rule = &self.rules[rank];
            pieces = merge_word(&pieces, &rule.left, &rule.right, &rule.merged);
        }
        pieces
    }

    /// Segments a stream, marking non-final pieces of each word with `@@`.
    pub fn apply<S: AsRef<str>>(&self, stream: &[S]) -> Vec<String> {
        self.apply_cached(stream, &mut HashMap::new())
    }

    /// Segments many streams, reusing work for repeated words.
    pub fn apply_corpus<S: AsRef<str>>(&self, corpus: &[Vec<S>]) -> Vec<Vec<String>> {
        let mut cache = HashMap::new();
        corpus.iter().map(|s| self.apply_cached(s, &mut cache)).collect()
    }

    fn apply_cached<S: AsRef<str>>(&self, stream: &[S], cache: &mut HashMap<Vec<String>, Vec<String>>) -> Vec<String> {
        let mut out = Vec::with_capacity(stream.len());
        if stream.is_empty() {
            return out;
        }
        for (i, word) in words(stream).into_iter().enumerate() {
            if i > 0 {
                out.push(WORD_BOUNDARY.to_string());
            }
            let key: Vec<String> = word.iter().map(|s| s.as_ref().to_string()).collect();
            let pieces = cache.entry(key).or_insert_with_key(|k| self.segment_word(k));
            let last = pieces.len().saturating_sub(1);
            for (j, piece) in pieces.iter().enumerate() {
                if j < last {
                    out.push(format!("{piece}{CONTINUATION}"));
                } else {
                    out.push(piece.clone());
                }
            }
        }
        out
    }

    /// Final vocabulary with training-corpus frequencies.
    pub fn vocab_report(&self) -> VocabReport {
        let freq = |s: &str| self.frequencies.get(s).copied().unwrap_or(0);
        let entries = self
            .base_symbols
            .iter()
            .map(|s| VocabEntry { symbol: s.clone(), merged: false, frequency: freq(s) })
            .chain(self.rules.iter().map(|r| VocabEntry {
                symbol: r.merged.clone(),
                merged: true,
                frequency: freq(&r.merged),
            }))
            .collect();
        VocabReport { base_count: self.base_symbols.len(), merged_count: self.rules.len(), entries }
    }

    /// Text form: a header, the base alphabet one symbol per line, then one
    /// `left<TAB>right` rule per line in rank order.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{HEADER_TAG}\tbase={}\ttarget={}\trules={}\n",
            self.base_symbols.len(),
            self.vocab_size_target,
            self.rules.len()
        );
        for s in &self.base_symbols {
            out.push_str(s);
            out.push('\n');
        }
        for r in &self.rules {
            let _ = writeln!(out, "{}\t{}", r.left, r.right);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, BpeError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(BpeError::Format { line: 1, reason: "empty file".into() })?;
        let fields: Vec<&str> = header.split('\t').collect();
        if fields.first() != Some(&HEADER_TAG) {
            return Err(BpeError::Format { line: 1, reason: "missing `#bpe` header".into() });
        }
        let field = |name: &str| -> Result<usize, BpeError> {
            fields
                .iter()
                .find_map(|f| f.strip_prefix(name).and_then(|v| v.strip_prefix('=')))
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| BpeError::Format { line: 1, reason: format!("missing `{name}=`") })
        };
        let (base, target) = (field("base")?, field("target")?);

        let mut base_symbols = BTreeSet::new();
        for _ in 0..base {
            let (i, sym) =
                lines.next().ok_or(BpeError::Format { line: base + 1, reason: "alphabet truncated".into() })?;
            if !is_atomic(sym) {
                return Err(BpeError::Format { line: i + 1, reason: format!("`{sym}` is not atomic") });
            }
            base_symbols.insert(sym.to_string());
        }
        let mut known: BTreeSet<String> = base_symbols.clone();
        let mut rules = Vec::new();
        for (i, line) in lines {
            let (left, right) = line
                .split_once('\t')
                .ok_or_else(|| BpeError::Format { line: i + 1, reason: "expected `left<TAB>right`".into() })?;
            if !known.contains(left) || !known.contains(right) {
                return Err(BpeError::Format { line: i + 1, reason: "rule uses an unknown symbol".into() });
            }
            let merged = format!("{left}{right}");
            if !known.insert(merged.clone()) {
                return Err(BpeError::Format { line: i + 1, reason: format!("duplicate symbol `{merged}`") });
            }
            rules.push(MergeRule { left: left.into(), right: right.into(), merged, rank: rules.len() });
        }
        if let Some(expected) = fields.iter().find_map(|f| f.strip_prefix("rules=")) {
            if expected.parse::<usize>().ok() != Some(rules.len()) {
                return Err(BpeError::Format { line: 1, reason: "rule count does not match header".into() });
            }
        }
        Ok(Self::from_parts(rules, base_symbols, target, BTreeMap::new()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), BpeError> {
        std::fs::write(path.as_ref(), self.to_text()).map_err(|e| BpeError::Io(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BpeError> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| BpeError::Io(e.to_string()))?;
        Self::from_text(&text)
    }
}

/// Undoes [`BpeModel::apply`]: strips continuation markers and splits merged
/// pieces into atomic units.
pub fn desegment<S: AsRef<str>>(stream: &[S]) -> Result<Vec<String>, BpeError> {
    let mut out = Vec::with_capacity(stream.len());
    let mut open: Option<usize> = None;
    for (pos, sym) in stream.iter().enumerate() {
        let sym = sym.as_ref();
        if sym == WORD_BOUNDARY {
            if let Some(position) = open {
                return Err(BpeError::DanglingContinuation { position });
            }
            out.push(sym.to_string());
            continue;
        }
        let text = match sym.strip_suffix(CONTINUATION) {
            Some(text) if !text.is_empty() => {
                open = Some(pos);
                text
            }
            _ => {
                open = None;
                sym
            }
        };
        out.extend(split_atomic(text).into_iter().map(str::to_string));
    }
    match open {
        Some(position) => Err(BpeError::DanglingContinuation { position }),
        None => Ok(out),
    }
}

/// Like [`desegment`], but never fails: a continuation marker with nothing
/// after it is simply dropped. Meant for model output.
pub fn desegment_lenient<S: AsRef<str>>(stream: &[S]) -> Vec<String> {
    let mut out = Vec::with_capacity(stream.len());
    for sym in stream {
        let sym = sym.as_ref();
        let text = sym.strip_suffix(CONTINUATION).filter(|t| !t.is_empty()).unwrap_or(sym);
        if text == WORD_BOUNDARY {
            out.push(text.to_string());
        } else {
            out.extend(split_atomic(text).into_iter().map(str::to_string));
        }
    }
    out
}
