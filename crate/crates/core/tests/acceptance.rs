//! Acceptance checks. Runs without the libtest harness so every check prints
//! one PASS or FAIL line even when output capture is on.

mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use subchar::bpe::{desegment, BpeModel};
use subchar::eval::{bleu, bootstrap_significance, BleuOptions, BootstrapOptions, Tokenizer};
use subchar::nmt::{self, AttentionKind, Dims, Dropout, Example, Seq2SeqModel};
use subchar::pipeline::{run_experiment, synth, tokenize, ExperimentConfig, ExperimentReport};
use subchar::subchar::{DecodeMode, DecompositionTable, SubcharLevel};
use subchar::symbols::{parse_eoc, WORD_BOUNDARY};

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.1?}, limit {limit:?}"))
}

fn round_trip() -> Outcome {
    let start = Instant::now();
    let table = common::sample_table();
    let chars: Vec<&str> = table.entries().map(|e| e.character.as_str()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures = 0;
    for _ in 0..10_000 {
        let sentence = common::random_sentence(&mut rng, &chars);
        for level in [SubcharLevel::Ideograph, SubcharLevel::Stroke] {
            let symbols = table.encode_symbols(&sentence, level);
            if table.decode_symbols(&symbols, level, DecodeMode::Strict).ok().as_ref() != Some(&sentence) {
                failures += 1;
            }
        }
    }
    ensure(failures == 0, || format!("{failures} failures"))?;
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!("10000 sentences x 2 levels, 0 failures in {:.1?}", start.elapsed()))
}

fn table_fidelity() -> Outcome {
    let table = common::common_table();
    let expected = [("驰", "马也"), ("池", "氵也"), ("施", "方也"), ("弛", "弓也"), ("地", "土也"), ("驱", "马区")];
    for (ch, parts) in expected {
        let entry = table.get(ch).ok_or_else(|| format!("{ch} missing"))?;
        let units = entry.units(SubcharLevel::Ideograph).concat();
        ensure(units == parts, || format!("{ch} -> {units}, expected {parts}"))?;
    }
    let symbols = table.encode_symbols(&["森林"], SubcharLevel::Ideograph);
    let trees = symbols.iter().filter(|s| *s == "木").count();
    ensure(trees == 5 && symbols.iter().all(|s| s == "木" || parse_eoc(s).is_some()), || {
        format!("森林 -> {symbols:?}")
    })?;
    Ok("6 ideograph pairs and 森林 = 5 x 木".into())
}

/// Distinct symbols of the sample corpus at each level, recorded once.
const SAMPLE_CHARS: usize = 2696;
const SAMPLE_IDEOGRAPH_UNITS: usize = 434;
const SAMPLE_STROKE_UNITS: usize = 29;

fn distinct_units(table: &DecompositionTable, corpus: &[Vec<String>], level: SubcharLevel) -> usize {
    let inventory = table.inventory(level);
    let mut seen = BTreeSet::new();
    for sentence in corpus {
        for s in table.encode_symbols(sentence, level) {
            if inventory.contains(&s) || parse_eoc(&s).is_some() {
                seen.insert(s);
            }
        }
    }
    seen.len()
}

fn vocabulary_compression() -> Outcome {
    let table = common::common_table();
    let text = std::fs::read_to_string(common::data("sample_corpus.txt")).map_err(|e| e.to_string())?;
    let corpus: Vec<Vec<String>> = text.lines().map(|l| tokenize(l, false)).collect();
    let chars: BTreeSet<&str> =
        text.lines().flat_map(subchar::symbols::graphemes).filter(|g| !g.trim().is_empty()).collect();
    let ideograph = distinct_units(&table, &corpus, SubcharLevel::Ideograph);
    let stroke = distinct_units(&table, &corpus, SubcharLevel::Stroke);
    let summary = format!("chars {} ideograph {ideograph} stroke {stroke}", chars.len());
    ensure(ideograph <= 600 && stroke <= 40, || format!("bounds exceeded: {summary}"))?;
    ensure(chars.len() > ideograph && chars.len() > stroke, || format!("no compression: {summary}"))?;
    ensure((chars.len(), ideograph, stroke) == (SAMPLE_CHARS, SAMPLE_IDEOGRAPH_UNITS, SAMPLE_STROKE_UNITS), || {
        format!("counts moved: {summary}")
    })?;
    Ok(summary)
}

fn bpe_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let corpora = 40;
    for i in 0..corpora {
        let words: usize = rng.gen_range(1..=200);
        let merges = rng.gen_range(0..=50);
        let corpus: Vec<Vec<String>> = (0..4).map(|_| common::random_stream(&mut rng, words.div_ceil(4))).collect();
        let base = corpus.iter().flatten().filter(|s| *s != WORD_BOUNDARY).collect::<BTreeSet<_>>().len();
        let expected = common::oracle_bpe(&corpus, base + merges).ok_or("oracle refused")?;
        let model = BpeModel::train(&corpus, base + merges).map_err(|e| e.to_string())?;
        let got: Vec<(String, String)> = model.rules().iter().map(|r| (r.left.clone(), r.right.clone())).collect();
        ensure(got == expected, || format!("corpus {i}: rules differ"))?;
    }
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!("{corpora} corpora agree in {:.1?}", start.elapsed()))
}

fn bpe_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let corpus: Vec<Vec<String>> = (0..30).map(|_| common::random_stream(&mut rng, 10)).collect();
    let model = BpeModel::train(&corpus, 60).map_err(|e| e.to_string())?;
    let mut failures = 0;
    for _ in 0..1000 {
        let words = rng.gen_range(1..=12);
        let stream = common::random_stream(&mut rng, words);
        if desegment(&model.apply(&stream)).ok().as_ref() != Some(&stream) {
            failures += 1;
        }
    }
    ensure(failures == 0, || format!("{failures} failures"))?;
    Ok(format!("1000 streams, {} merges, 0 failures", model.rules().len()))
}

fn dims(layers: usize, d: usize, attention: AttentionKind, shared: bool) -> Dims {
    Dims { src_vocab: 9, tgt_vocab: 9, emb: d, hidden: d, layers, shared_embeddings: shared, attention }
}

fn random_batch(rng: &mut ChaCha8Rng, vocab: usize, size: usize, max_len: usize) -> Vec<Example> {
    let seq = |rng: &mut ChaCha8Rng| (0..rng.gen_range(1..=max_len)).map(|_| rng.gen_range(4..vocab)).collect();
    (0..size).map(|_| Example::new(seq(rng), seq(rng))).collect()
}

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let batch = random_batch(&mut rng, 9, 3, 4);
    let mut worst: f64 = 0.0;
    for (layers, d, kind, shared) in [
        (1, 4, AttentionKind::Plain, false),
        (2, 6, AttentionKind::Plain, false),
        (2, 6, AttentionKind::Normalized, true),
    ] {
        let mut model = Seq2SeqModel::init(dims(layers, d, kind, shared), 5).map_err(|e| e.to_string())?;
        // larger weights than the initializer gives, so no gradient is negligible
        model.scale(5.0);
        let report = nmt::grad_check(&model, &batch, 1e-4).map_err(|e| e.to_string())?;
        ensure(report.max_relative_error < 1e-4, || format!("{layers} layers {kind:?}: {report:?}"))?;
        worst = worst.max(report.max_relative_error);
    }
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!("3 configurations, max relative error {worst:.2e} in {:.1?}", start.elapsed()))
}

fn attention_normalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst: f64 = 0.0;
    for pass in 0..1000 {
        let kind = if pass % 2 == 0 { AttentionKind::Plain } else { AttentionKind::Normalized };
        let model =
            Seq2SeqModel::init(dims(1 + pass % 2, 5, kind, pass % 3 == 0), pass as u64).map_err(|e| e.to_string())?;
        let batch = random_batch(&mut rng, 9, 3, 7);
        let mut noise = ChaCha8Rng::seed_from_u64(pass as u64);
        let out =
            nmt::forward(&model, &batch, Some(Dropout { rate: 0.2, rng: &mut noise })).map_err(|e| e.to_string())?;
        for a in &out.attention {
            for row in a.outer_iter() {
                worst = worst.max((row.sum() - 1.0).abs());
            }
        }
    }
    ensure(worst <= 1e-6, || format!("row sum off by {worst:e}"))?;
    Ok(format!("1000 passes, worst |sum - 1| = {worst:.1e}"))
}

fn initial_loss() -> Outcome {
    let vocab = 60;
    let expected = (vocab as f64).ln();
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let d = Dims {
            src_vocab: vocab,
            tgt_vocab: vocab,
            emb: 32,
            hidden: 32,
            layers: 2,
            shared_embeddings: false,
            attention: AttentionKind::Normalized,
        };
        let model = Seq2SeqModel::init(d, seed).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let batch = random_batch(&mut rng, vocab, 16, 10);
        let (loss, _) = nmt::evaluate(&model, &batch).map_err(|e| e.to_string())?;
        let rel = (loss - expected).abs() / expected;
        ensure(rel < 0.1, || format!("seed {seed}: loss {loss:.4} vs ln|V| {expected:.4}"))?;
        worst = worst.max(rel);
    }
    Ok(format!("10 seeds, worst relative gap {:.2}% from ln {vocab}", 100.0 * worst))
}

fn experiment(dir: &Path, text: &str) -> Result<ExperimentReport, String> {
    let config = ExperimentConfig::parse(text, dir).map_err(|e| e.to_string())?;
    run_experiment(&config).map_err(|e| e.to_string())
}

fn overfit() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let table_path = common::data("common_table.tsv");
    let table = DecompositionTable::from_path(&table_path).map_err(|e| e.to_string())?;
    let corpus = synth::copy_corpus(&table, 50, 30, 1);
    corpus.save(dir.path().join("train.src"), dir.path().join("train.tgt")).map_err(|e| e.to_string())?;
    let text = format!(
        "src = train.src\ntgt = train.tgt\ntable = {}\nsrc_level = ideograph\ntgt_level = ideograph\n\
         bpe_vocab = 300\ndev_size = 0\ntest_size = 0\ncoverage = 1.0\nemb = 32\nhidden = 32\n\
         learning_rate = 1.0\nsteps = 3000\nbatch_size = 50\ndropout = 0\nclip_norm = 5\n\
         eval_train = true\nbleu_tokenizer = char\nseed = 1\noutput = run\n",
        table_path.display()
    );
    let report = experiment(dir.path(), &text)?;
    let bleu = report.train_bleu.as_ref().map_or(0.0, |b| b.score);
    let summary = format!(
        "{} steps, train accuracy {:.4}, train BLEU {bleu:.2}, {:.1?}",
        report.steps,
        report.train_accuracy,
        start.elapsed()
    );
    ensure(report.train_accuracy >= 0.99 && bleu > 90.0, || summary.clone())?;
    within(start.elapsed(), Duration::from_secs(600))?;
    Ok(summary)
}

/// Target BPE vocabulary of the sub-character run in the smoke test.
const SMOKE_BPE_VOCAB: usize = 300;

fn smoke() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let table_path = common::data("common_table.tsv");
    let table = DecompositionTable::from_path(&table_path).map_err(|e| e.to_string())?;
    let corpus = synth::shared_radical_corpus(&table, synth::SharedRadicalSpec::default());
    let d = |n: &str| dir.path().join(n);
    corpus.train.save(d("train.src"), d("train.tgt")).map_err(|e| e.to_string())?;
    corpus.test.save(d("test.src"), d("test.tgt")).map_err(|e| e.to_string())?;
    // identical budget for both runs; only the granularity differs
    let run = |level: &str| {
        let text = format!(
            "src = train.src\ntgt = train.tgt\ntest_src = test.src\ntest_tgt = test.tgt\ntable = {}\n\
             src_level = {level}\ntgt_level = {level}\nbpe_vocab = {SMOKE_BPE_VOCAB}\ndev_size = 0\ncoverage = 1.0\n\
             layers = 1\noptimizer = adam\nlearning_rate = 0.02\nsteps = 5000\nbatch_size = 32\ndropout = 0\n\
             clip_norm = 5\nbleu_tokenizer = char\nseed = 1\noutput = run_{level}\n",
            table_path.display()
        );
        experiment(dir.path(), &text)
    };
    let score = |r: &ExperimentReport| r.test_bleu.as_ref().map_or(0.0, |b| b.score);
    let char_level = run("char")?;
    let sub = run("ideograph")?;
    let summary = format!(
        "{} train / {} test pairs, {} held-out characters: ideograph-BPE ({} merges) {:.2} vs char {:.2} test BLEU, {:.1?}",
        char_level.train_pairs,
        char_level.test_pairs,
        corpus.held_out.len(),
        sub.src_bpe_merges.unwrap_or(0),
        score(&sub),
        score(&char_level),
        start.elapsed()
    );
    ensure(score(&sub) >= score(&char_level), || summary.clone())?;
    Ok(summary)
}

fn bleu_correctness() -> Outcome {
    let ws = Tokenizer::Whitespace;
    let opts = BleuOptions::default();
    let refs = ["the cat sat on the mat", "a quick brown fox jumps", "one two three four five six"];
    let identity = bleu(&refs, &refs, opts, &ws).map_err(|e| e.to_string())?;
    ensure(identity.score == 100.0, || format!("identity scored {}", identity.score))?;
    let clipped = bleu(&["the the the"], &["the cat"], opts, &ws).map_err(|e| e.to_string())?;
    ensure(clipped.score == 0.0 && clipped.precisions[0] == 1.0 / 3.0, || format!("clipping case: {clipped:?}"))?;
    let hyps = ["the cat sat on a mat", "a quick fox jumps", "one two three five six"];
    let forward = bleu(&hyps, &refs, opts, &ws).map_err(|e| e.to_string())?;
    let backward =
        bleu(&[hyps[2], hyps[0], hyps[1]], &[refs[2], refs[0], refs[1]], opts, &ws).map_err(|e| e.to_string())?;
    ensure(forward.score == backward.score, || format!("{} != {} after permutation", forward.score, backward.score))?;
    Ok(format!("identity 100, clipping p1 = 1/3 score 0, permuted {:.4} = {:.4}", forward.score, backward.score))
}

fn bootstrap() -> Outcome {
    let ws = Tokenizer::Whitespace;
    let refs: Vec<String> =
        (0..60).map(|i| format!("w{} w{} w{} w{} w{} w{}", i, i + 1, i % 7, i % 3, i * 2, i + 5)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let system: Vec<String> =
        refs.iter().map(|r| if rng.gen_bool(0.5) { r.replacen('w', "v", 2) } else { r.clone() }).collect();
    for seed in 0..20 {
        let o = BootstrapOptions { samples: 1000, alpha: 0.0001, seed, ..Default::default() };
        let r = bootstrap_significance(&system, &system, &refs, o, &ws).map_err(|e| e.to_string())?;
        ensure(!r.significant, || format!("identical systems flagged with seed {seed}: {r:?}"))?;
    }
    let garbage: Vec<String> = (0..refs.len()).map(|i| format!("zz{i} q r s")).collect();
    let o = BootstrapOptions { samples: 1000, alpha: 0.001, seed: 1, ..Default::default() };
    let r = bootstrap_significance(&refs, &garbage, &refs, o, &ws).map_err(|e| e.to_string())?;
    ensure(r.significant, || format!("separation not flagged: {r:?}"))?;
    Ok(format!("20 seeds never significant; separation p = {} at alpha 0.001", r.p_value))
}

fn main() {
    let checks: [(&str, Check); 12] = [
        ("round-trip bijectivity", round_trip),
        ("decomposition fidelity", table_fidelity),
        ("vocabulary compression", vocabulary_compression),
        ("bpe oracle equivalence", bpe_oracle),
        ("bpe round-trip", bpe_round_trip),
        ("gradient check", gradient_check),
        ("attention normalization", attention_normalization),
        ("initial loss", initial_loss),
        ("overfit experiment", overfit),
        ("granularity smoke test", smoke),
        ("bleu correctness", bleu_correctness),
        ("bootstrap significance", bootstrap),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in checks {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
