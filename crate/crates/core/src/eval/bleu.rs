use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::symbols::graphemes;

pub type TokenizeFn = Arc<dyn Fn(&str) -> Vec<String> + Send + Sync>;

/// Splits a sentence into the tokens BLEU counts.
#[derive(Clone, Default)]
pub enum Tokenizer {
    /// Whitespace-separated tokens; the identity on pre-tokenized text.
    #[default]
    Whitespace,
    /// Every non-space grapheme is a token (for unsegmented CJK text).
    Graphemes,
    Custom(TokenizeFn),
}

impl Tokenizer {
    pub fn tokenize(&self, sentence: &str) -> Vec<String> {
        match self {
            Tokenizer::Whitespace => sentence.split_whitespace().map(str::to_string).collect(),
            Tokenizer::Graphemes => {
                graphemes(sentence).into_iter().filter(|g| !g.trim().is_empty()).map(str::to_string).collect()
            }
            Tokenizer::Custom(f) => f(sentence),
        }
    }
}

impl fmt::Debug for Tokenizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tokenizer::Whitespace => f.write_str("Whitespace"),
            Tokenizer::Graphemes => f.write_str("Graphemes"),
            Tokenizer::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl std::str::FromStr for Tokenizer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "whitespace" | "none" => Ok(Tokenizer::Whitespace),
            "char" | "graphemes" => Ok(Tokenizer::Graphemes),
            _ => Err(format!("unknown tokenizer `{s}` (expected whitespace or char)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleuOptions {
    pub max_n: usize,
    /// Add-one smoothing of the precisions for n >= 2.
    pub smoothing: bool,
}

impl Default for BleuOptions {
    fn default() -> Self {
        BleuOptions { max_n: 4, smoothing: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuResult {
    /// `100 * BP * exp(mean ln p_n)`.
    pub score: f64,
    pub precisions: Vec<f64>,
    pub matches: Vec<u64>,
    pub totals: Vec<u64>,
    pub brevity_penalty: f64,
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl fmt::Display for BleuResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p: Vec<String> = self.precisions.iter().map(|p| format!("{:.1}", 100.0 * p)).collect();
        write!(
            f,
            "BLEU = {:.2}, {} (BP={:.3}, ratio={:.3}, hyp_len={}, ref_len={})",
            self.score,
            p.join("/"),
            self.brevity_penalty,
            if self.ref_len == 0 { 0.0 } else { self.hyp_len as f64 / self.ref_len as f64 },
            self.hyp_len,
            self.ref_len
        )
    }
}

/// Clipped n-gram counts of one sentence pair. Corpus BLEU only needs the
/// sum of these over sentences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceStats {
    pub matches: Vec<u64>,
    pub totals: Vec<u64>,
    pub hyp_len: u64,
    pub ref_len: u64,
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, u64> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
        }
    }
    counts
}

impl SentenceStats {
    pub fn new<S: AsRef<str>, T: AsRef<str>>(hyp: &[S], reference: &[T], max_n: usize) -> Self {
        let mut stats = SentenceStats {
            matches: vec![0; max_n],
            totals: vec![0; max_n],
            hyp_len: hyp.len() as u64,
            ref_len: reference.len() as u64,
        };
        for n in 1..=max_n {
            let h = ngram_counts(hyp, n);
            let r = ngram_counts(reference, n);
            stats.totals[n - 1] = h.values().sum();
            stats.matches[n - 1] = h.iter().map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0))).sum();
        }
        stats
    }

    pub fn zero(max_n: usize) -> Self {
        SentenceStats { matches: vec![0; max_n], totals: vec![0; max_n], hyp_len: 0, ref_len: 0 }
    }

    pub fn add(&mut self, other: &SentenceStats) {
        self.matches.iter_mut().zip(&other.matches).for_each(|(a, b)| *a += b);
        self.totals.iter_mut().zip(&other.totals).for_each(|(a, b)| *a += b);
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
    }

    /// Corpus score from summed statistics. Without smoothing any zero
    /// precision makes the score 0.
    pub fn score(&self, smoothing: bool) -> BleuResult {
        let precisions: Vec<f64> = self
            .matches
            .iter()
            .zip(&self.totals)
            .enumerate()
            .map(|(i, (&m, &t))| {
                if smoothing && i > 0 {
                    (m + 1) as f64 / (t + 1) as f64
                } else if t == 0 {
                    0.0
                } else {
                    m as f64 / t as f64
                }
            })
            .collect();
        let brevity_penalty = if self.hyp_len == 0 {
            0.0
        } else if self.hyp_len >= self.ref_len {
            1.0
        } else {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
        };
        let score = if precisions.contains(&0.0) || brevity_penalty == 0.0 {
            0.0
        } else {
            let mean_log = precisions.iter().map(|p| p.ln()).sum::<f64>() / precisions.len() as f64;
            100.0 * brevity_penalty * mean_log.exp()
        };
        BleuResult {
            score,
            precisions,
            matches: self.matches.clone(),
            totals: self.totals.clone(),
            brevity_penalty,
            hyp_len: self.hyp_len,
            ref_len: self.ref_len,
        }
    }
}

pub(crate) fn check_lengths(hyps: usize, refs: usize) -> Result<(), EvalError> {
    if hyps != refs {
        return Err(EvalError::LengthMismatch { hyps, refs });
    }
    if refs == 0 {
        return Err(EvalError::EmptyCorpus);
    }
    Ok(())
}

/// Per-sentence statistics for already tokenized sentences.
pub fn sentence_stats<S: AsRef<str>, T: AsRef<str>>(
    hyps: &[Vec<S>],
    refs: &[Vec<T>],
    max_n: usize,
) -> Result<Vec<SentenceStats>, EvalError> {
    check_lengths(hyps.len(), refs.len())?;
    if max_n == 0 {
        return Err(EvalError::Options("max_n must be positive".into()));
    }
    Ok(hyps.iter().zip(refs).map(|(h, r)| SentenceStats::new(h, r, max_n)).collect())
}

/// Corpus BLEU of tokenized hypotheses against one reference each.
pub fn bleu_tokens<S: AsRef<str>, T: AsRef<str>>(
    hyps: &[Vec<S>],
    refs: &[Vec<T>],
    options: BleuOptions,
) -> Result<BleuResult, EvalError> {
    let stats = sentence_stats(hyps, refs, options.max_n)?;
    let mut total = SentenceStats::zero(options.max_n);
    stats.iter().for_each(|s| total.add(s));
    Ok(total.score(options.smoothing))
}

/// Corpus BLEU of raw sentences, tokenized with `tokenizer` on both sides.
pub fn bleu<S: AsRef<str>, T: AsRef<str>>(
    hyps: &[S],
    refs: &[T],
    options: BleuOptions,
    tokenizer: &Tokenizer,
) -> Result<BleuResult, EvalError> {
    check_lengths(hyps.len(), refs.len())?;
    let h: Vec<Vec<String>> = hyps.iter().map(|s| tokenizer.tokenize(s.as_ref())).collect();
    let r: Vec<Vec<String>> = refs.iter().map(|s| tokenizer.tokenize(s.as_ref())).collect();
    bleu_tokens(&h, &r, options)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_scores_hundred() {
        let refs = ["the cat sat on the mat", "a dog ran in the park today"];
        let r = bleu(&refs, &refs, BleuOptions::default(), &Tokenizer::Whitespace).unwrap();
        assert_eq!(r.score, 100.0);
        assert_eq!(r.brevity_penalty, 1.0);
    }

    #[test]
    fn clipping_case() {
        let r = bleu(&["the the the"], &["the cat"], BleuOptions::default(), &Tokenizer::Whitespace).unwrap();
        assert_eq!(r.precisions[0], 1.0 / 3.0);
        assert_eq!(r.matches, vec![1, 0, 0, 0]);
        assert_eq!(r.totals, vec![3, 2, 1, 0]);
        assert_eq!(r.score, 0.0);
    }

    #[test]
    fn brevity_penalty_by_hand() {
        // hyp 4 tokens, ref 6 tokens, all hyp n-grams present
        let r = bleu(&["a b c d"], &["a b c d e f"], BleuOptions::default(), &Tokenizer::Whitespace).unwrap();
        let bp = (1.0f64 - 6.0 / 4.0).exp();
        assert!((r.brevity_penalty - bp).abs() < 1e-15);
        assert!((r.score - 100.0 * bp).abs() < 1e-12);
    }

    #[test]
    fn empty_hypothesis_is_allowed() {
        let r =
            bleu(&["", "a b c d e"], &["x y", "a b c d e"], BleuOptions::default(), &Tokenizer::Whitespace).unwrap();
        assert_eq!(r.hyp_len, 5);
        assert!(r.score > 0.0 && r.score < 100.0);
    }

    #[test]
    fn errors() {
        let o = BleuOptions::default();
        assert!(matches!(bleu(&["a"], &["a", "b"], o, &Tokenizer::Whitespace), Err(EvalError::LengthMismatch { .. })));
        let none: [&str; 0] = [];
        assert!(matches!(bleu(&none, &none, o, &Tokenizer::Whitespace), Err(EvalError::EmptyCorpus)));
    }

    #[test]
    fn grapheme_tokenizer_and_smoothing() {
        let t = Tokenizer::Graphemes;
        assert_eq!(t.tokenize("森林 です"), vec!["森", "林", "で", "す"]);
        let o = BleuOptions { max_n: 4, smoothing: true };
        let r = bleu(&["森林"], &["森木"], o, &t).unwrap();
        // p1 = 1/2, p2 = 1/2, p3 = 1/1, p4 = 1/1
        assert!((r.score - 100.0 * 0.25f64.powf(0.25)).abs() < 1e-12);
    }
}
