use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::transform::base_symbols;
use super::PipelineError;
use crate::bpe::BpeModel;
use crate::subchar::{CoverageReport, DecompositionTable, GranularityLevel};
use crate::symbols::WORD_BOUNDARY;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelStats {
    pub level: String,
    /// Distinct symbols, word boundaries excluded.
    pub vocab_size: usize,
    pub symbols: usize,
    /// Symbols per sentence.
    pub avg_length: f64,
    /// Share of graphemes the table does not cover.
    pub passthrough_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub sentences: usize,
    pub levels: Vec<LevelStats>,
    pub coverage: Option<CoverageReport>,
}

impl StatsReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,vocab_size,symbols,avg_length,passthrough_rate\n");
        for r in &self.levels {
            out.push_str(&format!(
                "{},{},{},{:.4},{:.4}\n",
                r.level, r.vocab_size, r.symbols, r.avg_length, r.passthrough_rate
            ));
        }
        out
    }
}

impl fmt::Display for StatsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} sentences", self.sentences)?;
        writeln!(f, "{:<12} {:>10} {:>10} {:>10} {:>12}", "level", "vocab", "symbols", "avg len", "passthrough")?;
        for r in &self.levels {
            writeln!(
                f,
                "{:<12} {:>10} {:>10} {:>10.2} {:>11.2}%",
                r.level,
                r.vocab_size,
                r.symbols,
                r.avg_length,
                100.0 * r.passthrough_rate
            )?;
        }
        Ok(())
    }
}

fn level_stats(name: &str, streams: &[Vec<String>], passthrough_rate: f64) -> LevelStats {
    let mut vocab = BTreeSet::new();
    let mut symbols = 0;
    for s in streams {
        for sym in s.iter().filter(|s| *s != WORD_BOUNDARY) {
            vocab.insert(sym.as_str());
            symbols += 1;
        }
    }
    LevelStats {
        level: name.to_string(),
        vocab_size: vocab.len(),
        symbols,
        avg_length: if streams.is_empty() { 0.0 } else { symbols as f64 / streams.len() as f64 },
        passthrough_rate,
    }
}

/// Vocabulary size, mean length and passthrough rate of a tokenized corpus
/// at every level. Sub-character levels need `table`; BPE levels are only
/// reported when `bpe_vocab` is given.
pub fn stats_report<S: AsRef<str>>(
    corpus: &[Vec<S>],
    table: Option<&DecompositionTable>,
    bpe_vocab: Option<usize>,
) -> Result<StatsReport, PipelineError> {
    let coverage = table.map(|t| t.coverage_stats(corpus));
    let passthrough = coverage.as_ref().map_or(0.0, |c| c.passthrough_rate);
    let mut levels = Vec::new();
    for level in
        [GranularityLevel::Word, GranularityLevel::Char, GranularityLevel::IdeographBpe, GranularityLevel::StrokeBpe]
    {
        if level.subchar().is_some() && table.is_none() {
            continue;
        }
        let streams: Vec<Vec<String>> =
            corpus.iter().map(|s| base_symbols(s, level, table)).collect::<Result<_, _>>()?;
        let rate = if level.subchar().is_some() { passthrough } else { 0.0 };
        let name = match level {
            GranularityLevel::IdeographBpe => "ideograph",
            GranularityLevel::StrokeBpe => "stroke",
            other => other.as_str(),
        };
        levels.push(level_stats(name, &streams, rate));
        if let (Some(n), false) = (bpe_vocab, level == GranularityLevel::Word) {
            if streams.iter().all(Vec::is_empty) {
                continue;
            }
            let model = BpeModel::train(&streams, n).map_err(|e| PipelineError::Bpe(e.to_string()))?;
            let segmented = model.apply_corpus(&streams);
            levels.push(level_stats(&format!("{name}+bpe"), &segmented, rate));
        }
    }
    Ok(StatsReport { sentences: corpus.len(), levels, coverage })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_corpus_is_all_zero() {
        let r = stats_report::<String>(&[], None, None).unwrap();
        assert_eq!(r.levels.len(), 2);
        assert!(r.levels.iter().all(|l| l.vocab_size == 0 && l.avg_length == 0.0));
        assert!(r.to_csv().starts_with("level,"));
    }

    #[test]
    fn word_level_is_shorter_than_char_level() {
        let table = DecompositionTable::parse("木\t木\t㇐ ㇑ ㇒ ㇏\n林\t木 木\t㇐ ㇑ ㇒ ㇏ ㇐ ㇑ ㇒ ㇏\n").unwrap();
        let corpus = vec![vec!["林木", "の"], vec!["木"]];
        let r = stats_report(&corpus, Some(&table), None).unwrap();
        let get = |n: &str| r.levels.iter().find(|l| l.level == n).unwrap().clone();
        assert_eq!(get("word").avg_length, 1.5);
        assert_eq!(get("char").avg_length, 2.0);
        assert_eq!(get("ideograph").vocab_size, 3);
        assert!(get("ideograph").passthrough_rate > 0.0);
        assert!(r.to_string().contains("stroke"));
    }
}
