#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use subchar::subchar::DecompositionTable;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub fn sample_table() -> DecompositionTable {
    DecompositionTable::from_path(data("sample_table.tsv")).unwrap()
}

pub fn common_table() -> DecompositionTable {
    DecompositionTable::from_path(data("common_table.tsv")).unwrap()
}

/// Graphemes outside any table, including ones that look like stream syntax
/// or collide with unit names.
pub const PASSTHROUGH: &[&str] =
    &["の", "カ", "ー", "A", "z", "7", "。", "▁", "\\", "@", "<", "/", ">", "e\u{301}", "氵", "亻", "㇐", "丷"];

/// A random sentence of 1-6 words mixing table characters with passthrough
/// graphemes.
pub fn random_sentence(rng: &mut impl Rng, chars: &[&str]) -> Vec<String> {
    (0..rng.gen_range(1..=6))
        .map(|_| {
            (0..rng.gen_range(1..=4))
                .map(
                    |_| {
                        if rng.gen_bool(0.8) {
                            *chars.choose(rng).unwrap()
                        } else {
                            *PASSTHROUGH.choose(rng).unwrap()
                        }
                    },
                )
                .collect()
        })
        .collect()
}

/// Straightforward BPE: recount every adjacent pair of every word occurrence
/// before each merge.
pub fn oracle_bpe(corpus: &[Vec<String>], target: usize) -> Option<Vec<(String, String)>> {
    let mut words: Vec<Vec<String>> = Vec::new();
    for stream in corpus {
        let mut word = Vec::new();
        for s in stream.iter().chain(std::iter::once(&"▁".to_string())) {
            if s == "▁" {
                if !word.is_empty() {
                    words.push(std::mem::take(&mut word));
                }
            } else {
                word.push(s.clone());
            }
        }
    }
    let base: BTreeSet<String> = words.iter().flatten().cloned().collect();
    if base.is_empty() || target < base.len() {
        return None;
    }
    let mut known = base.clone();
    let mut blocked = BTreeSet::new();
    let mut rules = Vec::new();
    while base.len() + rules.len() < target {
        let mut counts: BTreeMap<(String, String), u64> = BTreeMap::new();
        for w in &words {
            for i in 1..w.len() {
                *counts.entry((w[i - 1].clone(), w[i].clone())).or_insert(0) += 1;
            }
        }
        let mut best: Option<((String, String), u64)> = None;
        for (pair, c) in counts {
            if !blocked.contains(&pair) && best.as_ref().is_none_or(|b| c > b.1) {
                best = Some((pair, c));
            }
        }
        let Some(((a, b), c)) = best else { break };
        if c < 2 {
            break;
        }
        let merged = format!("{a}{b}");
        if known.contains(&merged) {
            blocked.insert((a, b));
            continue;
        }
        for w in &mut words {
            let mut out = Vec::new();
            let mut i = 0;
            while i < w.len() {
                if i + 1 < w.len() && w[i] == a && w[i + 1] == b {
                    out.push(merged.clone());
                    i += 2;
                } else {
                    out.push(w[i].clone());
                    i += 1;
                }
            }
            *w = out;
        }
        known.insert(merged);
        rules.push((a, b));
    }
    Some(rules)
}

/// A random symbol stream over a small alphabet, so that pairs repeat.
pub fn random_stream(rng: &mut impl Rng, words: usize) -> Vec<String> {
    const ALPHABET: &[&str] = &["a", "b", "c", "d", "木", "</c0>", "</c1>", "\\▁"];
    let mut out = Vec::new();
    for i in 0..words {
        if i > 0 {
            out.push("▁".to_string());
        }
        for _ in 0..rng.gen_range(1..=6) {
            out.push(ALPHABET.choose(rng).unwrap().to_string());
        }
    }
    out
}
