//! Small generated corpora with known structure, for tests and demos.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::corpus::{ParallelCorpus, Provenance};
use crate::subchar::{DecompositionTable, SubcharLevel};

fn corpus(pairs: Vec<(String, String)>, origin: &str) -> ParallelCorpus {
    let n = pairs.len();
    ParallelCorpus { pairs, provenance: Provenance { origin: origin.into(), lines_read: n, dropped_empty: 0 } }
}

fn sentence(rng: &mut ChaCha8Rng, chars: &[&str], words: (usize, usize), word_len: (usize, usize)) -> Vec<String> {
    (0..rng.gen_range(words.0..=words.1))
        .map(|_| (0..rng.gen_range(word_len.0..=word_len.1)).map(|_| *chars.choose(rng).unwrap()).collect())
        .collect()
}

/// `pairs` sentences of 2-3 words, each paired with itself. Words are drawn
/// from a random subset of `characters` table characters.
pub fn copy_corpus(table: &DecompositionTable, pairs: usize, characters: usize, seed: u64) -> ParallelCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chars: Vec<&str> = table.entries().map(|e| e.character.as_str()).collect();
    chars.shuffle(&mut rng);
    chars.truncate(characters.max(1));
    let pairs = (0..pairs)
        .map(|_| {
            let s = sentence(&mut rng, &chars, (2, 3), (1, 2)).join(" ");
            (s.clone(), s)
        })
        .collect();
    corpus(pairs, "synthetic copy corpus")
}

/// A train/test pair of corpora where every test sentence uses characters
/// that never occur in training, although all of their components do.
#[derive(Debug, Clone)]
pub struct HeldOutCorpus {
    pub train: ParallelCorpus,
    pub test: ParallelCorpus,
    /// Characters that only occur in the test set.
    pub held_out: Vec<String>,
    /// Characters used in training.
    pub seen: Vec<String>,
}

/// Parameters of [`shared_radical_corpus`].
#[derive(Debug, Clone, Copy)]
pub struct SharedRadicalSpec {
    pub train_pairs: usize,
    pub test_pairs: usize,
    /// Number of left-hand radicals; characters are the two-part compounds
    /// built on them.
    pub radicals: usize,
    /// Right-hand components must combine with at least this many of the
    /// radicals.
    pub min_partners: usize,
    pub held_out: usize,
    /// Inclusive range of words per sentence.
    pub words: (usize, usize),
    /// Inclusive range of characters per word.
    pub word_len: (usize, usize),
    /// Reverse the word order on the target side; otherwise the target is
    /// a copy of the source.
    pub reverse: bool,
    pub seed: u64,
}

impl Default for SharedRadicalSpec {
    fn default() -> Self {
        SharedRadicalSpec {
            train_pairs: 1800,
            test_pairs: 200,
            radicals: 12,
            min_partners: 3,
            held_out: 12,
            words: (2, 2),
            word_len: (2, 3),
            reverse: false,
            seed: 7,
        }
    }
}

/// Logographic-to-logographic corpus whose target is the source, optionally
/// with the word order reversed. Characters are two-part compounds drawn
/// from a grid of common radicals and the right-hand components they share,
/// so every component occurs in several characters. Every test sentence
/// contains exactly one held-out character; both of its parts occur in
/// training characters.
pub fn shared_radical_corpus(table: &DecompositionTable, spec: SharedRadicalSpec) -> HeldOutCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let level = SubcharLevel::Ideograph;
    let compounds: Vec<(&str, &str, &str)> = table
        .entries()
        .filter_map(|e| match e.units(level) {
            [l, r] if l != r => Some((e.character.as_str(), l.as_str(), r.as_str())),
            _ => None,
        })
        .collect();

    let mut left_use: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, l, _) in &compounds {
        *left_use.entry(l).or_insert(0) += 1;
    }
    let mut lefts: Vec<(&str, usize)> = left_use.into_iter().collect();
    lefts.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let lefts: BTreeSet<&str> = lefts.iter().take(spec.radicals).map(|(l, _)| *l).collect();
    let mut partners: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, l, r) in &compounds {
        if lefts.contains(l) {
            *partners.entry(r).or_insert(0) += 1;
        }
    }
    let mut inventory: Vec<(&str, &str, &str)> = compounds
        .into_iter()
        .filter(|(_, l, r)| lefts.contains(l) && partners.get(r).is_some_and(|&n| n >= spec.min_partners))
        .collect();
    inventory.shuffle(&mut rng);

    // hold out characters whose parts stay in at least two seen characters
    let mut uses: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, l, r) in &inventory {
        *uses.entry(l).or_insert(0) += 1;
        *uses.entry(r).or_insert(0) += 1;
    }
    let mut held = Vec::new();
    let mut seen = Vec::new();
    for &(c, l, r) in &inventory {
        if held.len() < spec.held_out && uses[l] > 2 && uses[r] > 2 {
            *uses.get_mut(l).unwrap() -= 1;
            *uses.get_mut(r).unwrap() -= 1;
            held.push(c);
        } else {
            seen.push(c);
        }
    }

    let pair = |words: Vec<String>| {
        let mut target: Vec<&str> = words.iter().map(String::as_str).collect();
        if spec.reverse {
            target.reverse();
        }
        (words.join(" "), target.join(" "))
    };
    let make = |rng: &mut ChaCha8Rng, chars: &[&str]| sentence(rng, chars, spec.words, spec.word_len);
    let train = (0..spec.train_pairs).map(|_| pair(make(&mut rng, &seen))).collect();
    // test sentences are training-like with one character swapped for a
    // held-out one
    let test = (0..spec.test_pairs)
        .map(|_| {
            let mut words = make(&mut rng, &seen);
            let w = rng.gen_range(0..words.len());
            let mut chars: Vec<String> = words[w].chars().map(String::from).collect();
            let c = rng.gen_range(0..chars.len());
            chars[c] = held.choose(&mut rng).unwrap().to_string();
            words[w] = chars.concat();
            pair(words)
        })
        .collect();
    HeldOutCorpus {
        train: corpus(train, "synthetic shared-radical corpus (train)"),
        test: corpus(test, "synthetic shared-radical corpus (test)"),
        held_out: held.iter().map(|s| s.to_string()).collect(),
        seen: seen.iter().map(|s| s.to_string()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> DecompositionTable {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/common_table.tsv");
        DecompositionTable::from_path(path).unwrap()
    }

    #[test]
    fn copy_corpus_is_deterministic() {
        let t = table();
        let a = copy_corpus(&t, 50, 40, 3);
        assert_eq!(a.len(), 50);
        assert!(a.pairs.iter().all(|(s, t)| s == t));
        assert_eq!(a, copy_corpus(&t, 50, 40, 3));
    }

    #[test]
    fn held_out_characters_only_in_test() {
        let t = table();
        let c =
            shared_radical_corpus(&t, SharedRadicalSpec { train_pairs: 1000, test_pairs: 50, ..Default::default() });
        assert_eq!(c.held_out.len(), 12);
        let train_chars: BTreeSet<char> = c.train.pairs.iter().flat_map(|p| p.0.chars()).collect();
        let train_units: BTreeSet<&String> = train_chars
            .iter()
            .filter_map(|ch| t.get(&ch.to_string()))
            .flat_map(|e| e.units(SubcharLevel::Ideograph))
            .collect();
        for h in &c.held_out {
            assert!(!train_chars.contains(&h.chars().next().unwrap()));
            for u in t.get(h).unwrap().units(SubcharLevel::Ideograph) {
                assert!(train_units.contains(u), "{h}: component {u} unseen");
            }
        }
        for (s, _) in &c.test.pairs {
            assert_eq!(s.chars().filter(|ch| !train_chars.contains(ch) && *ch != ' ').count(), 1, "{s}");
        }
    }
}
