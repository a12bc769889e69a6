use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::eval::Tokenizer;
use crate::nmt::{AttentionKind, DecodeMode, TrainConfig};
use crate::subchar::GranularityLevel;

/// Where the parallel text comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum CorpusSource {
    Files { src: PathBuf, tgt: PathBuf },
    Tsv(PathBuf),
}

/// Everything needed to run one experiment. Read from and written to a flat
/// `key = value` text file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub corpus: CorpusSource,
    /// Fixed test set; when given, `test_size` is ignored.
    pub test_corpus: Option<CorpusSource>,
    pub src_level: GranularityLevel,
    pub tgt_level: GranularityLevel,
    /// Target vocabulary size of each BPE model.
    pub bpe_vocab: usize,
    pub shared_vocab: bool,
    pub table: Option<PathBuf>,
    pub dev_size: usize,
    pub test_size: usize,
    pub coverage: f64,
    /// Treat every grapheme of the input as a token instead of splitting on
    /// whitespace.
    pub char_split: bool,
    pub output: PathBuf,
    pub seed: u64,
    pub emb: usize,
    pub hidden: usize,
    pub layers: usize,
    pub attention: AttentionKind,
    pub train: TrainConfig,
    pub decode: DecodeMode,
    /// 0 picks a limit from the length filter.
    pub max_decode_len: usize,
    /// Tokenization applied before BLEU.
    pub bleu_tokenizer: String,
    /// Also translate the training set and report its BLEU.
    pub eval_train: bool,
    /// Hypotheses of a baseline system on the same test set.
    pub baseline: Option<PathBuf>,
    pub signif_samples: usize,
    pub alpha: f64,
}

impl Default for ExperimentConfig {
    /// Desk-scale settings.
    fn default() -> Self {
        ExperimentConfig {
            corpus: CorpusSource::Tsv(PathBuf::from("corpus.tsv")),
            test_corpus: None,
            src_level: GranularityLevel::IdeographBpe,
            tgt_level: GranularityLevel::IdeographBpe,
            bpe_vocab: 500,
            shared_vocab: false,
            table: None,
            dev_size: 1000,
            test_size: 1000,
            coverage: 0.9,
            char_split: false,
            output: PathBuf::from("runs/experiment"),
            seed: 1,
            emb: 16,
            hidden: 32,
            layers: 2,
            attention: AttentionKind::Normalized,
            train: TrainConfig { total_steps: 3000, batch_size: 32, ..TrainConfig::default() },
            decode: DecodeMode::Greedy,
            max_decode_len: 0,
            bleu_tokenizer: "whitespace".into(),
            eval_train: false,
            baseline: None,
            signif_samples: 1000,
            alpha: 0.0001,
        }
    }
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got `{v}`")),
    }
}

fn parse_num<T: std::str::FromStr>(v: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| format!("`{v}`: {e}"))
}

fn attention_name(kind: AttentionKind) -> &'static str {
    match kind {
        AttentionKind::Plain => "plain",
        AttentionKind::Normalized => "normalized",
    }
}

impl ExperimentConfig {
    /// Settings of a full-size run (see `configs/full-scale.conf`). Not meant to run on a
    /// desktop.
    pub fn full_scale() -> Self {
        ExperimentConfig {
            bpe_vocab: 8000,
            emb: 300,
            hidden: 512,
            layers: 2,
            train: TrainConfig::default(),
            ..Self::default()
        }
    }

    /// Parses `key = value` lines. Relative paths are resolved against
    /// `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, PipelineError> {
        let mut c = ExperimentConfig::default();
        let (mut src, mut tgt, mut tsv) = (None, None, None);
        let (mut test_src, mut test_tgt, mut test_tsv) = (None, None, None);
        let path = |v: &str| base_dir.join(v);
        c.output = base_dir.join(&c.output);
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: String| PipelineError::ConfigSyntax { line: n + 1, reason };
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected `key = value`".into()))?;
            let (key, v) = (key.trim(), value.trim());
            let r: Result<(), String> = (|| {
                match key {
                    "src" => src = Some(path(v)),
                    "tgt" => tgt = Some(path(v)),
                    "tsv" => tsv = Some(path(v)),
                    "test_src" => test_src = Some(path(v)),
                    "test_tgt" => test_tgt = Some(path(v)),
                    "test_tsv" => test_tsv = Some(path(v)),
                    "src_level" => c.src_level = v.parse()?,
                    "tgt_level" => c.tgt_level = v.parse()?,
                    "bpe_vocab" => c.bpe_vocab = parse_num(v)?,
                    "shared_vocab" => c.shared_vocab = parse_bool(v)?,
                    "table" => c.table = Some(path(v)),
                    "dev_size" => c.dev_size = parse_num(v)?,
                    "test_size" => c.test_size = parse_num(v)?,
                    "coverage" => c.coverage = parse_num(v)?,
                    "char_split" => c.char_split = parse_bool(v)?,
                    "output" => c.output = path(v),
                    "seed" => c.seed = parse_num(v)?,
                    "emb" => c.emb = parse_num(v)?,
                    "hidden" => c.hidden = parse_num(v)?,
                    "layers" => c.layers = parse_num(v)?,
                    "attention" => {
                        c.attention = match v {
                            "plain" => AttentionKind::Plain,
                            "normalized" => AttentionKind::Normalized,
                            _ => return Err(format!("unknown attention `{v}` (plain|normalized)")),
                        }
                    }
                    "optimizer" => c.train.optimizer = v.parse()?,
                    "learning_rate" => c.train.learning_rate = parse_num(v)?,
                    "steps" => c.train.total_steps = parse_num(v)?,
                    "batch_size" => c.train.batch_size = parse_num(v)?,
                    "dropout" => c.train.dropout = parse_num(v)?,
                    "clip_norm" => c.train.clip_norm = if v == "none" { None } else { Some(parse_num(v)?) },
                    "log_every" => c.train.log_every = parse_num(v)?,
                    "decode" => c.decode = v.parse()?,
                    "max_decode_len" => c.max_decode_len = parse_num(v)?,
                    "bleu_tokenizer" => {
                        v.parse::<Tokenizer>()?;
                        c.bleu_tokenizer = v.to_string();
                    }
                    "eval_train" => c.eval_train = parse_bool(v)?,
                    "baseline" => c.baseline = Some(path(v)),
                    "signif_samples" => c.signif_samples = parse_num(v)?,
                    "alpha" => c.alpha = parse_num(v)?,
                    _ => return Err(format!("unknown key `{key}`")),
                }
                Ok(())
            })();
            r.map_err(err)?;
        }
        c.corpus = match (src, tgt, tsv) {
            (Some(src), Some(tgt), None) => CorpusSource::Files { src, tgt },
            (None, None, Some(t)) => CorpusSource::Tsv(t),
            _ => return Err(PipelineError::Config("give either `src` and `tgt`, or `tsv`".into())),
        };
        c.test_corpus = match (test_src, test_tgt, test_tsv) {
            (None, None, None) => None,
            (Some(src), Some(tgt), None) => Some(CorpusSource::Files { src, tgt }),
            (None, None, Some(t)) => Some(CorpusSource::Tsv(t)),
            _ => return Err(PipelineError::Config("give either `test_src` and `test_tgt`, or `test_tsv`".into())),
        };
        c.train.seed = c.seed;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let dir = std::path::absolute(dir).map_err(|e| PipelineError::io(dir, e))?;
        Self::parse(&text, &dir)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.shared_vocab && self.src_level != self.tgt_level {
            return Err(PipelineError::Config(format!(
                "shared_vocab needs the same level on both sides, got {} and {}",
                self.src_level, self.tgt_level
            )));
        }
        let needs_table = self.src_level.subchar().is_some() || self.tgt_level.subchar().is_some();
        if needs_table && self.table.is_none() {
            return Err(PipelineError::MissingTable {
                level: if self.src_level.subchar().is_some() { self.src_level } else { self.tgt_level },
            });
        }
        if !(self.coverage > 0.0 && self.coverage <= 1.0) {
            return Err(PipelineError::Config(format!("coverage {} not in (0, 1]", self.coverage)));
        }
        if self.emb == 0 || self.hidden == 0 || self.layers == 0 {
            return Err(PipelineError::Config("model dimensions must be positive".into()));
        }
        if self.signif_samples == 0 {
            return Err(PipelineError::Config("signif_samples must be positive".into()));
        }
        self.train.validate().map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn tokenizer(&self) -> Tokenizer {
        self.bleu_tokenizer.parse().unwrap_or_default()
    }

    /// Canonical text form; `parse(to_text())` gives back the same config
    /// when paths are absolute.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let p = |p: &Path| p.display().to_string();
        match &self.corpus {
            CorpusSource::Files { src, tgt } => {
                let _ = writeln!(s, "src = {}\ntgt = {}", p(src), p(tgt));
            }
            CorpusSource::Tsv(t) => {
                let _ = writeln!(s, "tsv = {}", p(t));
            }
        }
        match &self.test_corpus {
            Some(CorpusSource::Files { src, tgt }) => {
                let _ = writeln!(s, "test_src = {}\ntest_tgt = {}", p(src), p(tgt));
            }
            Some(CorpusSource::Tsv(t)) => {
                let _ = writeln!(s, "test_tsv = {}", p(t));
            }
            None => {}
        }
        if let Some(t) = &self.table {
            let _ = writeln!(s, "table = {}", p(t));
        }
        if let Some(b) = &self.baseline {
            let _ = writeln!(s, "baseline = {}", p(b));
        }
        let t = &self.train;
        let clip = t.clip_norm.map_or("none".to_string(), |c| c.to_string());
        let _ = write!(
            s,
            "src_level = {}\ntgt_level = {}\nbpe_vocab = {}\nshared_vocab = {}\ndev_size = {}\n\
             test_size = {}\ncoverage = {}\nchar_split = {}\noutput = {}\nseed = {}\nemb = {}\n\
             hidden = {}\nlayers = {}\nattention = {}\noptimizer = {}\nlearning_rate = {}\nsteps = {}\n\
             batch_size = {}\ndropout = {}\nclip_norm = {}\nlog_every = {}\ndecode = {}\n\
             max_decode_len = {}\nbleu_tokenizer = {}\neval_train = {}\nsignif_samples = {}\nalpha = {}\n",
            self.src_level,
            self.tgt_level,
            self.bpe_vocab,
            self.shared_vocab,
            self.dev_size,
            self.test_size,
            self.coverage,
            self.char_split,
            p(&self.output),
            self.seed,
            self.emb,
            self.hidden,
            self.layers,
            attention_name(self.attention),
            t.optimizer,
            t.learning_rate,
            t.total_steps,
            t.batch_size,
            t.dropout,
            clip,
            t.log_every,
            self.decode,
            self.max_decode_len,
            self.bleu_tokenizer,
            self.eval_train,
            self.signif_samples,
            self.alpha,
        );
        s
    }

    /// SHA-256 of the canonical text, with the output directory left out so
    /// the same experiment hashes the same wherever it is written.
    pub fn hash(&self) -> String {
        let text: String =
            self.to_text().lines().filter(|l| !l.starts_with("output =")).map(|l| format!("{l}\n")).collect();
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}
