use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bleu::{check_lengths, BleuOptions, SentenceStats, Tokenizer};
use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOptions {
    pub samples: usize,
    pub alpha: f64,
    pub seed: u64,
    pub bleu: BleuOptions,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions { samples: 1000, alpha: 0.0001, seed: 0, bleu: BleuOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub samples: usize,
    pub bleu_a: f64,
    pub bleu_b: f64,
    pub wins_a: usize,
    pub wins_b: usize,
    pub ties: usize,
    /// Share of samples in which the system with the lower overall score
    /// scores at least as high as the other one.
    pub p_value: f64,
    pub alpha: f64,
    pub significant: bool,
}

/// Paired bootstrap resampling over already tokenized sentences.
pub fn bootstrap_tokens<S: AsRef<str>, T: AsRef<str>, U: AsRef<str>>(
    hyps_a: &[Vec<S>],
    hyps_b: &[Vec<T>],
    refs: &[Vec<U>],
    options: BootstrapOptions,
) -> Result<SignificanceResult, EvalError> {
    check_lengths(hyps_a.len(), refs.len())?;
    check_lengths(hyps_b.len(), refs.len())?;
    if options.bleu.max_n == 0 {
        return Err(EvalError::Options("max_n must be positive".into()));
    }
    if options.samples == 0 {
        return Err(EvalError::Options("at least one bootstrap sample is required".into()));
    }
    if !(0.0..=1.0).contains(&options.alpha) {
        return Err(EvalError::Options(format!("alpha {} not in [0, 1]", options.alpha)));
    }
    let max_n = options.bleu.max_n;
    let stats_a: Vec<SentenceStats> = hyps_a.iter().zip(refs).map(|(h, r)| SentenceStats::new(h, r, max_n)).collect();
    let stats_b: Vec<SentenceStats> = hyps_b.iter().zip(refs).map(|(h, r)| SentenceStats::new(h, r, max_n)).collect();
    let corpus = |stats: &[SentenceStats], idx: &mut dyn Iterator<Item = usize>| {
        let mut total = SentenceStats::zero(max_n);
        idx.for_each(|i| total.add(&stats[i]));
        total.score(options.bleu.smoothing).score
    };
    let n = refs.len();
    let bleu_a = corpus(&stats_a, &mut (0..n));
    let bleu_b = corpus(&stats_b, &mut (0..n));

    // sample i draws from its own stream, so the outcome does not depend on
    // how samples are scheduled
    let outcomes: Vec<std::cmp::Ordering> = (0..options.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            rng.set_stream(i as u64);
            let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let a = corpus(&stats_a, &mut idx.iter().copied());
            let b = corpus(&stats_b, &mut idx.iter().copied());
            a.total_cmp(&b)
        })
        .collect();
    let wins_a = outcomes.iter().filter(|o| o.is_gt()).count();
    let wins_b = outcomes.iter().filter(|o| o.is_lt()).count();
    let ties = options.samples - wins_a - wins_b;
    let lower_wins = match bleu_a.total_cmp(&bleu_b) {
        std::cmp::Ordering::Greater => wins_b + ties,
        std::cmp::Ordering::Less => wins_a + ties,
        std::cmp::Ordering::Equal => options.samples,
    };
    let p_value = lower_wins as f64 / options.samples as f64;
    Ok(SignificanceResult {
        samples: options.samples,
        bleu_a,
        bleu_b,
        wins_a,
        wins_b,
        ties,
        p_value,
        alpha: options.alpha,
        significant: p_value <= options.alpha,
    })
}

/// Paired bootstrap resampling of two systems' raw outputs.
pub fn bootstrap_significance<S: AsRef<str>, T: AsRef<str>, U: AsRef<str>>(
    hyps_a: &[S],
    hyps_b: &[T],
    refs: &[U],
    options: BootstrapOptions,
    tokenizer: &Tokenizer,
) -> Result<SignificanceResult, EvalError> {
    let tok = |xs: &[&str]| -> Vec<Vec<String>> { xs.iter().map(|s| tokenizer.tokenize(s)).collect() };
    let a: Vec<&str> = hyps_a.iter().map(AsRef::as_ref).collect();
    let b: Vec<&str> = hyps_b.iter().map(AsRef::as_ref).collect();
    let r: Vec<&str> = refs.iter().map(AsRef::as_ref).collect();
    bootstrap_tokens(&tok(&a), &tok(&b), &tok(&r), options)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus() -> Vec<String> {
        (0..60).map(|i| format!("w{} w{} w{} w{} w{} w{}", i, i + 1, i % 7, i % 3, i * 2, i + 5)).collect()
    }

    #[test]
    fn identical_systems_are_not_significant() {
        let refs = corpus();
        let hyps: Vec<String> = refs.iter().map(|s| s.replacen("w", "v", 2)).collect();
        let o = BootstrapOptions { samples: 200, seed: 4, ..Default::default() };
        let r = bootstrap_significance(&hyps, &hyps, &refs, o, &Tokenizer::Whitespace).unwrap();
        assert_eq!(r.ties, 200);
        assert_eq!(r.p_value, 1.0);
        assert!(!r.significant);
    }

    #[test]
    fn separated_systems_are_significant_and_deterministic() {
        let refs = corpus();
        let garbage: Vec<String> = (0..refs.len()).map(|i| format!("zz{i} q r s")).collect();
        let o = BootstrapOptions { samples: 300, alpha: 0.001, seed: 1, ..Default::default() };
        let r = bootstrap_significance(&refs, &garbage, &refs, o, &Tokenizer::Whitespace).unwrap();
        assert_eq!(r.wins_a, 300);
        assert!(r.significant);
        let again = bootstrap_significance(&refs, &garbage, &refs, o, &Tokenizer::Whitespace).unwrap();
        assert_eq!(r, again);
        let zero = BootstrapOptions { samples: 0, ..o };
        assert!(bootstrap_significance(&refs, &garbage, &refs, zero, &Tokenizer::Whitespace).is_err());
    }
}
