use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::corpus::{length_filter, write_lines, ParallelCorpus};
use super::transform::SideCodec;
use super::PipelineError;
use crate::bpe::{BpeError, BpeModel};
use crate::eval::{bleu, bootstrap_significance, BleuOptions, BleuResult, BootstrapOptions, SignificanceResult};
use crate::nmt::{self, Checkpoint, Dims, Example, Seq2SeqModel, Vocab};
use crate::subchar::DecompositionTable;
use crate::symbols::UNKNOWN_GRAPHEME;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config_hash: String,
    pub seed: u64,
    pub src_level: String,
    pub tgt_level: String,
    pub train_pairs: usize,
    pub dev_pairs: usize,
    pub test_pairs: usize,
    /// Training pairs removed by the length filter.
    pub filtered_out: usize,
    pub max_len: usize,
    pub src_bpe_merges: Option<usize>,
    pub tgt_bpe_merges: Option<usize>,
    pub src_vocab: usize,
    pub tgt_vocab: usize,
    pub parameters: usize,
    pub steps: usize,
    pub final_batch_loss: Option<f64>,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub dev_loss: Option<f64>,
    pub dev_accuracy: Option<f64>,
    pub train_bleu: Option<BleuResult>,
    pub test_bleu: Option<BleuResult>,
    pub significance: Option<SignificanceResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// File name inside the output directory.
    pub path: String,
    pub sha256: String,
}

/// Everything needed to repeat a run and check that it came out the same.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seed: u64,
    /// Full configuration in `key = value` form.
    pub config: String,
    pub artifacts: BTreeMap<String, Artifact>,
    pub report: ExperimentReport,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::io(path, e))
    }
}

fn stage<T, E>(name: &'static str, r: Result<T, E>) -> Result<T, PipelineError>
where
    E: std::error::Error + Send + Sync + 'static,
{
    r.map_err(|e| PipelineError::Stage { stage: name, source: Box::new(e) })
}

/// Lines of space-separated symbols.
pub fn write_symbol_lines(path: &Path, streams: &[Vec<String>]) -> Result<(), PipelineError> {
    let lines: Vec<String> = streams.iter().map(|s| s.join(" ")).collect();
    write_lines(path, lines.iter().map(String::as_str))
}

pub fn read_symbol_lines(path: &Path) -> Result<Vec<Vec<String>>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    Ok(text.lines().map(|l| l.split(' ').filter(|s| !s.is_empty()).map(str::to_string).collect()).collect())
}

struct Outputs {
    dir: PathBuf,
    artifacts: BTreeMap<String, Artifact>,
}

impl Outputs {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn record(&mut self, key: &str, name: &str) -> Result<(), PipelineError> {
        let path = self.path(name);
        let bytes = std::fs::read(&path).map_err(|e| PipelineError::io(&path, e))?;
        let sha256 = hex::encode(Sha256::digest(&bytes));
        self.artifacts.insert(key.to_string(), Artifact { path: name.to_string(), sha256 });
        Ok(())
    }

    fn write(&mut self, key: &str, name: &str, contents: &str) -> Result<(), PipelineError> {
        let path = self.path(name);
        std::fs::write(&path, contents).map_err(|e| PipelineError::io(&path, e))?;
        self.record(key, name)
    }
}

/// Trains BPE, lowering the target to the alphabet size when the requested
/// vocabulary is smaller than the alphabet.
fn train_bpe(streams: &[Vec<String>], target: usize) -> Result<BpeModel, BpeError> {
    match BpeModel::train(streams, target) {
        Err(BpeError::TargetBelowAlphabet { alphabet, .. }) => {
            log::warn!("bpe vocabulary {target} is below the alphabet size {alphabet}; no merges learned");
            BpeModel::train(streams, alphabet)
        }
        other => other,
    }
}

fn encode_examples(src: &[Vec<String>], tgt: &[Vec<String>], sv: &Vocab, tv: &Vocab) -> Vec<Example> {
    src.iter().zip(tgt).map(|(s, t)| Example::new(sv.encode(s), tv.encode(t))).collect()
}

fn translate_all(
    ck: &Checkpoint,
    src_codec: &SideCodec,
    tgt_codec: &SideCodec,
    sources: &[&str],
    mode: nmt::DecodeMode,
    max_len: usize,
) -> Result<(Vec<Vec<String>>, Vec<String>), PipelineError> {
    let results: Vec<(Vec<String>, String)> = sources
        .par_iter()
        .map(|s| {
            let ids = ck.src_vocab.encode(&src_codec.encode(s)?);
            let out = nmt::translate(&ck.model, &ids, mode, max_len);
            let symbols: Vec<String> =
                out.iter()
                    .map(|&id| {
                        if id == nmt::UNK {
                            UNKNOWN_GRAPHEME.to_string()
                        } else {
                            ck.tgt_vocab.symbol(id).to_string()
                        }
                    })
                    .collect();
            let text = tgt_codec.decode(&symbols, true)?;
            Ok((symbols, text))
        })
        .collect::<Result<_, PipelineError>>()?;
    Ok(results.into_iter().unzip())
}

/// Runs every stage of an experiment and writes its artifacts and manifest
/// into `config.output`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, PipelineError> {
    Ok(run(config)?.report)
}

fn run(config: &ExperimentConfig) -> Result<Manifest, PipelineError> {
    stage("config", config.validate())?;
    let dir = config.output.clone();
    stage("config", std::fs::create_dir_all(&dir))?;
    let mut out = Outputs { dir, artifacts: BTreeMap::new() };
    out.write("config", "config.conf", &config.to_text())?;

    // ingest and split
    let corpus = stage("ingest", ParallelCorpus::load(&config.corpus))?;
    let fixed_test = match &config.test_corpus {
        Some(src) => Some(stage("ingest", ParallelCorpus::load(src))?),
        None => None,
    };
    log::info!("ingested {} pairs ({} dropped)", corpus.len(), corpus.provenance.dropped_empty);
    let test_size = if fixed_test.is_some() { 0 } else { config.test_size };
    let mut split = stage("split", corpus.split(config.dev_size, test_size, config.seed))?;
    if let Some(t) = fixed_test {
        split.test = t;
    }
    for (name, part) in [("train", &split.train), ("dev", &split.dev), ("test", &split.test)] {
        let (s, t) = (format!("corpus.{name}.src"), format!("corpus.{name}.tgt"));
        stage("split", part.save(out.path(&s), out.path(&t)))?;
        out.record(&s, &s)?;
        out.record(&t, &t)?;
    }

    // transform and filter
    let table = match &config.table {
        Some(p) => Some(Arc::new(stage("transform", DecompositionTable::from_path(p))?)),
        None => None,
    };
    let mut src_codec = SideCodec::new(config.src_level, table.clone(), config.char_split);
    let mut tgt_codec = SideCodec::new(config.tgt_level, table.clone(), config.char_split);
    let base = |codec: &SideCodec, texts: Vec<&str>| -> Result<Vec<Vec<String>>, PipelineError> {
        stage("transform", texts.into_iter().map(|t| codec.base(t)).collect())
    };
    let src_base = base(&src_codec, split.train.sources())?;
    let tgt_base = base(&tgt_codec, split.train.targets())?;
    let lengths: Vec<(usize, usize)> = src_base.iter().zip(&tgt_base).map(|(s, t)| (s.len(), t.len())).collect();
    let (max_len, keep) = length_filter(&lengths, config.coverage);
    let (src_base, tgt_base): (Vec<Vec<String>>, Vec<Vec<String>>) =
        src_base.into_iter().zip(tgt_base).zip(&keep).filter(|(_, k)| **k).map(|(p, _)| p).unzip();
    let filtered_out = keep.iter().filter(|k| !**k).count();
    log::info!("length filter: max_len {max_len}, {filtered_out} pairs dropped");
    if src_base.is_empty() {
        return Err(PipelineError::Stage { stage: "filter", source: "no training pairs left".into() });
    }
    stage("filter", write_symbol_lines(&out.path("train.base.src"), &src_base))?;
    stage("filter", write_symbol_lines(&out.path("train.base.tgt"), &tgt_base))?;
    out.record("train.base.src", "train.base.src")?;
    out.record("train.base.tgt", "train.base.tgt")?;

    // bpe
    if config.shared_vocab && config.src_level.uses_bpe() {
        let model = stage(
            "bpe",
            BpeModel::train_shared(&src_base, &tgt_base, config.bpe_vocab).or_else(|e| match e {
                BpeError::TargetBelowAlphabet { .. } => {
                    let joined: Vec<Vec<String>> = src_base.iter().chain(&tgt_base).cloned().collect();
                    train_bpe(&joined, config.bpe_vocab)
                }
                e => Err(e),
            }),
        )?;
        out.write("bpe.shared", "bpe.shared", &model.to_text())?;
        src_codec.bpe = Some(model.clone());
        tgt_codec.bpe = Some(model);
    } else {
        if config.src_level.uses_bpe() {
            let m = stage("bpe", train_bpe(&src_base, config.bpe_vocab))?;
            out.write("bpe.src", "bpe.src", &m.to_text())?;
            src_codec.bpe = Some(m);
        }
        if config.tgt_level.uses_bpe() {
            let m = stage("bpe", train_bpe(&tgt_base, config.bpe_vocab))?;
            out.write("bpe.tgt", "bpe.tgt", &m.to_text())?;
            tgt_codec.bpe = Some(m);
        }
    }
    let src_seg: Vec<Vec<String>> = src_base.iter().map(|s| src_codec.segment(s)).collect();
    let tgt_seg: Vec<Vec<String>> = tgt_base.iter().map(|s| tgt_codec.segment(s)).collect();
    stage("bpe", write_symbol_lines(&out.path("train.seg.src"), &src_seg))?;
    stage("bpe", write_symbol_lines(&out.path("train.seg.tgt"), &tgt_seg))?;
    out.record("train.seg.src", "train.seg.src")?;
    out.record("train.seg.tgt", "train.seg.tgt")?;

    // vocabularies
    let (src_vocab, tgt_vocab) = if config.shared_vocab {
        let v = Vocab::build(&[&src_seg, &tgt_seg], None);
        (v.clone(), v)
    } else {
        (Vocab::build(&[&src_seg], None), Vocab::build(&[&tgt_seg], None))
    };
    out.write("vocab.src", "vocab.src", &src_vocab.to_text())?;
    out.write("vocab.tgt", "vocab.tgt", &tgt_vocab.to_text())?;

    // train
    let examples = encode_examples(&src_seg, &tgt_seg, &src_vocab, &tgt_vocab);
    let dims = Dims {
        src_vocab: src_vocab.len(),
        tgt_vocab: tgt_vocab.len(),
        emb: config.emb,
        hidden: config.hidden,
        layers: config.layers,
        shared_embeddings: config.shared_vocab,
        attention: config.attention,
    };
    let mut model = stage("train", Seq2SeqModel::init(dims, config.seed))?;
    let mut train_config = config.train.clone();
    train_config.seed = config.seed;
    train_config.max_src_len = Some(max_len);
    train_config.max_tgt_len = Some(max_len);
    let curve = stage("train", nmt::train(&mut model, &examples, &train_config))?;
    let mut loss_csv = String::from("step,loss,learning_rate\n");
    for p in &curve.loss_curve {
        loss_csv.push_str(&format!("{},{},{}\n", p.step, p.loss, p.learning_rate));
    }
    out.write("loss", "loss.csv", &loss_csv)?;
    let checkpoint = stage("train", Checkpoint::new(model, src_vocab, tgt_vocab, curve.steps))?;
    out.write("model", "model.json", &checkpoint.to_json())?;
    let (train_loss, train_accuracy) = stage("train", nmt::evaluate(&checkpoint.model, &examples))?;

    let (dev_loss, dev_accuracy) = if split.dev.is_empty() {
        (None, None)
    } else {
        let s = base(&src_codec, split.dev.sources())?;
        let t = base(&tgt_codec, split.dev.targets())?;
        let s: Vec<Vec<String>> = s.iter().map(|x| src_codec.segment(x)).collect();
        let t: Vec<Vec<String>> = t.iter().map(|x| tgt_codec.segment(x)).collect();
        let ex: Vec<Example> = encode_examples(&s, &t, &checkpoint.src_vocab, &checkpoint.tgt_vocab)
            .into_iter()
            .filter(|e| !e.src.is_empty() && !e.tgt.is_empty())
            .collect();
        let (l, a) = stage("train", nmt::evaluate(&checkpoint.model, &ex))?;
        (Some(l), Some(a))
    };

    // translate and evaluate
    let max_decode = if config.max_decode_len > 0 { config.max_decode_len } else { 2 * max_len + 10 };
    let tokenizer = config.tokenizer();
    let bleu_options = BleuOptions::default();
    let mut test_bleu = None;
    let mut significance = None;
    if !split.test.is_empty() {
        let (symbols, hyps) =
            translate_all(&checkpoint, &src_codec, &tgt_codec, &split.test.sources(), config.decode, max_decode)
                .map_err(|e| PipelineError::Stage { stage: "translate", source: Box::new(e) })?;
        let refs: Vec<String> = split.test.targets().iter().map(|t| tgt_codec.normalize(t)).collect();
        stage("translate", write_symbol_lines(&out.path("test.hyp.seg"), &symbols))?;
        out.record("test.hyp.seg", "test.hyp.seg")?;
        stage("translate", write_lines(&out.path("test.hyp"), hyps.iter().map(String::as_str)))?;
        out.record("test.hyp", "test.hyp")?;
        stage("translate", write_lines(&out.path("test.ref"), refs.iter().map(String::as_str)))?;
        out.record("test.ref", "test.ref")?;
        test_bleu = Some(stage("evaluate", bleu(&hyps, &refs, bleu_options, &tokenizer))?);
        if let Some(baseline) = &config.baseline {
            let text = stage("evaluate", std::fs::read_to_string(baseline))?;
            let base_hyps: Vec<&str> = text.lines().collect();
            let options = BootstrapOptions {
                samples: config.signif_samples,
                alpha: config.alpha,
                seed: config.seed,
                bleu: bleu_options,
            };
            significance =
                Some(stage("evaluate", bootstrap_significance(&hyps, &base_hyps, &refs, options, &tokenizer))?);
        }
    }
    let mut train_bleu = None;
    if config.eval_train {
        let (_, hyps) =
            translate_all(&checkpoint, &src_codec, &tgt_codec, &split.train.sources(), config.decode, max_decode)
                .map_err(|e| PipelineError::Stage { stage: "translate", source: Box::new(e) })?;
        let refs: Vec<String> = split.train.targets().iter().map(|t| tgt_codec.normalize(t)).collect();
        stage("translate", write_lines(&out.path("train.hyp"), hyps.iter().map(String::as_str)))?;
        out.record("train.hyp", "train.hyp")?;
        train_bleu = Some(stage("evaluate", bleu(&hyps, &refs, bleu_options, &tokenizer))?);
    }

    let report = ExperimentReport {
        config_hash: config.hash(),
        seed: config.seed,
        src_level: config.src_level.to_string(),
        tgt_level: config.tgt_level.to_string(),
        train_pairs: examples.len(),
        dev_pairs: split.dev.len(),
        test_pairs: split.test.len(),
        filtered_out,
        max_len,
        src_bpe_merges: src_codec.bpe.as_ref().map(|m| m.rules().len()),
        tgt_bpe_merges: tgt_codec.bpe.as_ref().map(|m| m.rules().len()),
        src_vocab: checkpoint.src_vocab.len(),
        tgt_vocab: checkpoint.tgt_vocab.len(),
        parameters: checkpoint.model.parameter_count(),
        steps: curve.steps,
        final_batch_loss: curve.loss_curve.last().map(|p| p.loss),
        train_loss,
        train_accuracy,
        dev_loss,
        dev_accuracy,
        train_bleu,
        test_bleu,
        significance,
    };
    let report_json = serde_json::to_string_pretty(&report).expect("report serializes");
    out.write("report", "report.json", &report_json)?;
    let manifest = Manifest {
        config_hash: report.config_hash.clone(),
        seed: config.seed,
        config: config.to_text(),
        artifacts: out.artifacts.clone(),
        report,
    };
    let path = out.path("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, text).map_err(|e| PipelineError::io(&path, e))?;
    Ok(manifest)
}

/// Re-runs the experiment recorded in a manifest, writing into `output`
/// (or the original output directory). Returns the new report and the names
/// of artifacts whose contents differ from the recorded run.
pub fn reproduce(
    manifest_path: impl AsRef<Path>,
    output: Option<&Path>,
) -> Result<(ExperimentReport, Vec<String>), PipelineError> {
    let manifest = Manifest::load(manifest_path)?;
    let mut config = ExperimentConfig::parse(&manifest.config, Path::new("/"))?;
    if let Some(o) = output {
        config.output = o.to_path_buf();
    }
    let rerun = run(&config)?;
    let differing = manifest
        .artifacts
        .iter()
        .filter(|(k, a)| {
            // the config file records the output directory
            k.as_str() != "config" && rerun.artifacts.get(*k).map(|b| &b.sha256) != Some(&a.sha256)
        })
        .map(|(k, _)| k.clone())
        .collect();
    Ok((rerun.report, differing))
}
