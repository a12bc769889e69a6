use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{DecompositionTable, SubcharLevel, Unit};
use crate::symbols::graphemes;

/// Vocabulary compression figures for a tokenized corpus.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CoverageReport {
    pub sentences: usize,
    pub graphemes: usize,
    /// Distinct graphemes in the corpus, covered or not.
    pub distinct_characters: usize,
    /// Distinct graphemes that the table decomposes.
    pub distinct_covered_characters: usize,
    pub passthrough_graphemes: usize,
    pub passthrough_rate: f64,
    pub distinct_ideograph_units: usize,
    pub distinct_stroke_units: usize,
    pub ideograph_histogram: BTreeMap<String, u64>,
    pub stroke_histogram: BTreeMap<String, u64>,
}

impl DecompositionTable {
    /// Counts characters and units over `corpus` (sentences of word tokens).
    pub fn coverage_stats<S: AsRef<str>>(&self, corpus: &[Vec<S>]) -> CoverageReport {
        let mut report = CoverageReport { sentences: corpus.len(), ..Default::default() };
        let mut distinct = BTreeSet::new();
        for sentence in corpus {
            for token in sentence {
                for g in graphemes(token.as_ref()) {
                    report.graphemes += 1;
                    distinct.insert(g.to_string());
                    if !self.contains(g) {
                        report.passthrough_graphemes += 1;
                        continue;
                    }
                    for (level, histogram) in [
                        (SubcharLevel::Ideograph, &mut report.ideograph_histogram),
                        (SubcharLevel::Stroke, &mut report.stroke_histogram),
                    ] {
                        for unit in self.decompose_char(g, level) {
                            if let Unit::Ideograph(s) | Unit::Stroke(s) = unit {
                                *histogram.entry(s).or_insert(0) += 1;
                            }
                        }
                    }
                }
            }
        }
        report.distinct_characters = distinct.len();
        report.distinct_covered_characters = distinct.iter().filter(|g| self.contains(g)).count();
        report.distinct_ideograph_units = report.ideograph_histogram.len();
        report.distinct_stroke_units = report.stroke_histogram.len();
        report.passthrough_rate =
            if report.graphemes == 0 { 0.0 } else { report.passthrough_graphemes as f64 / report.graphemes as f64 };
        report
    }
}
