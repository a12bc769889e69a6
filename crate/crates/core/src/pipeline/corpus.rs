use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::CorpusSource;
use super::PipelineError;
use crate::symbols::graphemes;

/// Where a corpus came from and what ingestion dropped.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub origin: String,
    pub lines_read: usize,
    /// Lines dropped because one side was empty.
    pub dropped_empty: usize,
}

/// Sentence-aligned source/target text. Neither side of a pair is empty.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParallelCorpus {
    pub pairs: Vec<(String, String)>,
    pub provenance: Provenance,
}

fn read_lines(path: &Path) -> Result<Vec<String>, PipelineError> {
    let bytes = std::fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    let mut lines = Vec::new();
    for (n, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        let line = std::str::from_utf8(raw)
            .map_err(|_| PipelineError::Encoding { path: path.display().to_string(), line: n + 1 })?;
        lines.push(line.to_string());
    }
    // a trailing newline does not start another line
    if bytes.ends_with(b"\n") || bytes.is_empty() {
        lines.pop();
    }
    Ok(lines)
}

impl ParallelCorpus {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn from_pairs(pairs: impl Iterator<Item = (String, String)>, origin: String) -> Self {
        let mut corpus = ParallelCorpus { pairs: Vec::new(), provenance: Provenance { origin, ..Default::default() } };
        for (s, t) in pairs {
            corpus.provenance.lines_read += 1;
            let (s, t) = (s.trim(), t.trim());
            if s.is_empty() || t.is_empty() {
                corpus.provenance.dropped_empty += 1;
            } else {
                corpus.pairs.push((s.to_string(), t.to_string()));
            }
        }
        corpus
    }

    /// Two line-aligned files.
    pub fn from_files(src: impl AsRef<Path>, tgt: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let (src, tgt) = (src.as_ref(), tgt.as_ref());
        let s = read_lines(src)?;
        let t = read_lines(tgt)?;
        if s.len() != t.len() {
            return Err(PipelineError::CountMismatch { src: s.len(), tgt: t.len() });
        }
        Ok(Self::from_pairs(s.into_iter().zip(t), format!("{} | {}", src.display(), tgt.display())))
    }

    /// One `source<TAB>target` pair per line.
    pub fn from_tsv(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let mut pairs = Vec::new();
        for (n, line) in read_lines(path)?.into_iter().enumerate() {
            let (s, t) = line
                .split_once('\t')
                .filter(|(_, t)| !t.contains('\t'))
                .ok_or_else(|| PipelineError::TsvFormat { path: path.display().to_string(), line: n + 1 })?;
            pairs.push((s.to_string(), t.to_string()));
        }
        Ok(Self::from_pairs(pairs.into_iter(), path.display().to_string()))
    }

    pub fn load(source: &CorpusSource) -> Result<Self, PipelineError> {
        match source {
            CorpusSource::Files { src, tgt } => Self::from_files(src, tgt),
            CorpusSource::Tsv(path) => Self::from_tsv(path),
        }
    }

    /// Writes the two sides as line-aligned files.
    pub fn save(&self, src: impl AsRef<Path>, tgt: impl AsRef<Path>) -> Result<(), PipelineError> {
        write_lines(src.as_ref(), self.pairs.iter().map(|p| p.0.as_str()))?;
        write_lines(tgt.as_ref(), self.pairs.iter().map(|p| p.1.as_str()))
    }

    pub fn sources(&self) -> Vec<&str> {
        self.pairs.iter().map(|p| p.0.as_str()).collect()
    }

    pub fn targets(&self) -> Vec<&str> {
        self.pairs.iter().map(|p| p.1.as_str()).collect()
    }

    fn subset(&self, indices: &[usize], origin: &str) -> ParallelCorpus {
        ParallelCorpus {
            pairs: indices.iter().map(|&i| self.pairs[i].clone()).collect(),
            provenance: Provenance {
                origin: format!("{origin} of {}", self.provenance.origin),
                lines_read: indices.len(),
                dropped_empty: 0,
            },
        }
    }

    /// Draws disjoint dev and test sets uniformly without replacement; the
    /// rest, in original order, is the training set.
    pub fn split(&self, dev: usize, test: usize, seed: u64) -> Result<Split, PipelineError> {
        let n = self.len();
        if n <= dev + test {
            return Err(PipelineError::TooSmall { size: n, dev, test });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let picked = sample(&mut rng, n, dev + test).into_vec();
        let (mut dev_idx, mut test_idx) = (picked[..dev].to_vec(), picked[dev..].to_vec());
        dev_idx.sort_unstable();
        test_idx.sort_unstable();
        let mut held = vec![false; n];
        picked.iter().for_each(|&i| held[i] = true);
        let train_idx: Vec<usize> = (0..n).filter(|&i| !held[i]).collect();
        Ok(Split {
            train: self.subset(&train_idx, "train"),
            dev: self.subset(&dev_idx, "dev"),
            test: self.subset(&test_idx, "test"),
        })
    }
}

pub(crate) fn write_lines<'a>(path: &Path, lines: impl Iterator<Item = &'a str>) -> Result<(), PipelineError> {
    let mut text = String::new();
    for l in lines {
        text.push_str(l);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: ParallelCorpus,
    pub dev: ParallelCorpus,
    pub test: ParallelCorpus,
}

/// Splits a sentence into tokens: on whitespace, or into non-space graphemes
/// with `char_split`.
pub fn tokenize(sentence: &str, char_split: bool) -> Vec<String> {
    if char_split {
        graphemes(sentence).into_iter().filter(|g| !g.trim().is_empty()).map(str::to_string).collect()
    } else {
        sentence.split_whitespace().map(str::to_string).collect()
    }
}

/// Length threshold for `coverage`: the smallest `L` such that at least that
/// share of pairs have both sides no longer than `L`. Returns `L` and a keep
/// flag per pair.
pub fn length_filter(lengths: &[(usize, usize)], coverage: f64) -> (usize, Vec<bool>) {
    if lengths.is_empty() {
        return (0, Vec::new());
    }
    let mut longest: Vec<usize> = lengths.iter().map(|&(s, t)| s.max(t)).collect();
    longest.sort_unstable();
    let n = longest.len();
    // guard against 0.9 * 10 = 9.000000000000002
    let needed = ((coverage * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    let limit = longest[needed - 1];
    (limit, lengths.iter().map(|&(s, t)| s.max(t) <= limit).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(n: usize) -> ParallelCorpus {
        ParallelCorpus::from_pairs((0..n).map(|i| (format!("s{i}"), format!("t{i}"))), "mem".into())
    }

    #[test]
    fn ingest_files_and_tsv() {
        let dir = tempfile::tempdir().unwrap();
        let (s, t, tsv) = (dir.path().join("s"), dir.path().join("t"), dir.path().join("c.tsv"));
        std::fs::write(&s, "a\nb\nc\n").unwrap();
        std::fs::write(&t, "x\ny\nz\n").unwrap();
        assert_eq!(ParallelCorpus::from_files(&s, &t).unwrap().len(), 3);
        std::fs::write(&t, "x\ny\n").unwrap();
        assert!(matches!(ParallelCorpus::from_files(&s, &t), Err(PipelineError::CountMismatch { src: 3, tgt: 2 })));
        std::fs::write(&tsv, "a\tx\nb\t\nc\tz\n").unwrap();
        let c = ParallelCorpus::from_tsv(&tsv).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.provenance.dropped_empty, 1);
        std::fs::write(&tsv, "a\tx\nno tab\n").unwrap();
        assert!(matches!(ParallelCorpus::from_tsv(&tsv), Err(PipelineError::TsvFormat { line: 2, .. })));
        std::fs::write(&s, b"ok\n\xff\xfe\n").unwrap();
        assert!(matches!(ParallelCorpus::from_files(&s, &s), Err(PipelineError::Encoding { line: 2, .. })));
    }

    #[test]
    fn split_is_disjoint_and_seeded() {
        let c = corpus(100);
        let a = c.split(10, 10, 5).unwrap();
        assert_eq!((a.train.len(), a.dev.len(), a.test.len()), (80, 10, 10));
        let mut all: Vec<_> = a.train.pairs.iter().chain(&a.dev.pairs).chain(&a.test.pairs).collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 100);
        assert_eq!(c.split(10, 10, 5).unwrap(), a);
        assert_ne!(c.split(10, 10, 6).unwrap(), a);
        assert!(matches!(c.split(50, 50, 0), Err(PipelineError::TooSmall { .. })));
    }

    #[test]
    fn length_filter_percentile() {
        let lengths: Vec<(usize, usize)> = (1..=10).map(|l| (l, 1)).collect();
        let (limit, keep) = length_filter(&lengths, 0.9);
        assert_eq!(limit, 9);
        assert_eq!(keep.iter().filter(|k| !**k).count(), 1);
        assert_eq!(length_filter(&lengths, 1.0).0, 10);
        assert_eq!(length_filter(&[(4, 4); 7], 0.5), (4, vec![true; 7]));
        assert_eq!(length_filter(&[], 0.9), (0, vec![]));
    }

    #[test]
    fn tokenizers() {
        assert_eq!(tokenize(" 森林  です ", false), vec!["森林", "です"]);
        assert_eq!(tokenize("森林 です", true), vec!["森", "林", "で", "す"]);
    }
}
