use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use subchar::bpe::{desegment, desegment_lenient, BpeModel};
use subchar::eval::{
    bleu, bootstrap_significance, BleuOptions, BleuResult, BootstrapOptions, SignificanceResult, Tokenizer,
};
use subchar::nmt::{self, AttentionKind, Checkpoint, DecodeMode, Dims, Example, Optimizer, Seq2SeqModel, Vocab};
use subchar::pipeline::{
    length_filter, read_symbol_lines, reproduce, run_experiment, stats_report, synth, tokenize, write_symbol_lines,
    CorpusSource, ExperimentConfig, ExperimentReport, ParallelCorpus, SideCodec,
};
use subchar::subchar::{DecompositionTable, GranularityLevel};
use subchar::symbols::UNKNOWN_GRAPHEME;

#[derive(Parser)]
#[command(name = "subchar", version, about = "Sub-character NMT experiment toolkit")]
struct Cli {
    /// Report format for commands that print one.
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Read a parallel corpus and write it as two cleaned files.
    Ingest {
        #[command(flatten)]
        input: CorpusArgs,
        #[arg(long)]
        out_src: PathBuf,
        #[arg(long)]
        out_tgt: PathBuf,
    },
    /// Split a corpus into train, dev and test parts.
    Split {
        #[command(flatten)]
        input: CorpusArgs,
        #[arg(long, default_value_t = 1000)]
        dev: usize,
        #[arg(long, default_value_t = 1000)]
        test: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Directory receiving {train,dev,test}.{src,tgt}.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Drop symbol-line pairs longer than the coverage length.
    Filter {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        #[arg(long, default_value_t = 0.9)]
        coverage: f64,
        #[arg(long)]
        out_src: PathBuf,
        #[arg(long)]
        out_tgt: PathBuf,
    },
    /// Turn text into base symbols at a granularity level, or back.
    Transform {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        level: LevelArgs,
        /// Symbols to text instead of text to symbols.
        #[arg(long)]
        inverse: bool,
        /// With --inverse, replace undecodable spans by U+FFFD.
        #[arg(long)]
        lenient: bool,
    },
    /// Learn BPE merges from base-symbol files.
    BpeTrain {
        /// Base-symbol files; with --shared, the source and the target side.
        #[arg(long, required = true)]
        input: Vec<PathBuf>,
        #[arg(long)]
        vocab_size: usize,
        #[arg(long)]
        output: PathBuf,
        /// Learn one model over both sides.
        #[arg(long)]
        shared: bool,
        /// Write the symbol inventory with frequencies as CSV.
        #[arg(long)]
        vocab_report: Option<PathBuf>,
    },
    /// Segment base-symbol files with a BPE model.
    BpeApply {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, required = true)]
        input: Vec<PathBuf>,
        #[arg(long, required = true)]
        output: Vec<PathBuf>,
        /// The model is shared; segment the source and the target side.
        #[arg(long)]
        shared: bool,
    },
    /// Train a translation model on segmented symbol files.
    Train(TrainArgs),
    /// Translate segmented symbol lines with a trained model.
    Translate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// `greedy` or `beam:K`.
        #[arg(long, default_value = "greedy")]
        decode: DecodeMode,
        /// Output length limit; by default twice the source length plus 10.
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// Model output symbols back to text.
    Decode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        level: LevelArgs,
        /// The input carries BPE continuation markers.
        #[arg(long)]
        segmented: bool,
        /// Fail on malformed input instead of repairing it.
        #[arg(long)]
        strict: bool,
    },
    /// Corpus BLEU of a hypothesis file against a reference file.
    Bleu {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[command(flatten)]
        bleu: BleuArgs,
    },
    /// Paired bootstrap test between two systems.
    Signif {
        #[arg(long)]
        hyp_a: PathBuf,
        #[arg(long)]
        hyp_b: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long, default_value_t = 0.0001)]
        alpha: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        bleu: BleuArgs,
    },
    /// Vocabulary size, length and passthrough rate at every level.
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        table: Option<PathBuf>,
        /// Also report each level after BPE with this vocabulary size.
        #[arg(long)]
        bpe_vocab: Option<usize>,
        #[arg(long)]
        char_split: bool,
    },
    /// Run a full experiment from a config file, or repeat one from its
    /// manifest.
    Run {
        #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
        config: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Output directory when repeating from a manifest.
        #[arg(long, requires = "manifest")]
        output: Option<PathBuf>,
    },
    /// Generate a synthetic parallel corpus.
    Synth {
        #[arg(value_enum)]
        kind: SynthKind,
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 50)]
        pairs: usize,
        /// Characters used by the copy corpus.
        #[arg(long, default_value_t = 30)]
        chars: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    /// Target equals source.
    Copy,
    /// Copy corpus whose test set holds characters unseen in training.
    SharedRadical,
}

#[derive(Args)]
struct CorpusArgs {
    #[arg(long, requires = "tgt", conflicts_with = "tsv")]
    src: Option<PathBuf>,
    #[arg(long, requires = "src")]
    tgt: Option<PathBuf>,
    #[arg(long, required_unless_present = "src")]
    tsv: Option<PathBuf>,
}

impl CorpusArgs {
    fn load(&self) -> Result<ParallelCorpus> {
        let source = match (&self.src, &self.tgt, &self.tsv) {
            (Some(s), Some(t), _) => CorpusSource::Files { src: s.clone(), tgt: t.clone() },
            (_, _, Some(t)) => CorpusSource::Tsv(t.clone()),
            _ => bail!("give --src and --tgt, or --tsv"),
        };
        Ok(ParallelCorpus::load(&source)?)
    }
}

#[derive(Args)]
struct LevelArgs {
    /// word, char, bpe, ideograph or stroke.
    #[arg(long)]
    level: GranularityLevel,
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long)]
    char_split: bool,
}

impl LevelArgs {
    fn codec(&self) -> Result<SideCodec> {
        let table = match &self.table {
            Some(p) => Some(Arc::new(DecompositionTable::from_path(p)?)),
            None => None,
        };
        Ok(SideCodec::new(self.level, table, self.char_split))
    }
}

#[derive(Args)]
struct BleuArgs {
    /// whitespace or char.
    #[arg(long, default_value = "whitespace")]
    tokenizer: Tokenizer,
    #[arg(long, default_value_t = 4)]
    max_n: usize,
    /// Add-one smoothing for n >= 2.
    #[arg(long)]
    smoothing: bool,
}

impl BleuArgs {
    fn options(&self) -> BleuOptions {
        BleuOptions { max_n: self.max_n, smoothing: self.smoothing }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Segmented source symbols, one sentence per line.
    #[arg(long)]
    src: PathBuf,
    #[arg(long)]
    tgt: PathBuf,
    /// Checkpoint to write.
    #[arg(long)]
    output: PathBuf,
    /// Experiment config supplying model and training settings; flags below
    /// override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// One vocabulary and embedding table for both sides.
    #[arg(long)]
    shared_vocab: bool,
    #[arg(long)]
    emb: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    /// plain or normalized.
    #[arg(long, value_parser = parse_attention)]
    attention: Option<AttentionKind>,
    /// sgd or adam.
    #[arg(long)]
    optimizer: Option<Optimizer>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    clip_norm: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    log_every: Option<usize>,
    /// Write the loss curve as CSV.
    #[arg(long)]
    loss_csv: Option<PathBuf>,
}

fn parse_attention(s: &str) -> Result<AttentionKind, String> {
    match s {
        "plain" => Ok(AttentionKind::Plain),
        "normalized" => Ok(AttentionKind::Normalized),
        _ => Err(format!("unknown attention `{s}` (plain|normalized)")),
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().map(str::to_string).collect())
}

fn write_lines(path: &Path, lines: &[String]) -> Result<()> {
    let mut text = lines.join("\n");
    if !lines.is_empty() {
        text.push('\n');
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn bleu_csv(r: &BleuResult) -> String {
    let mut out = String::from("n,matches,totals,precision\n");
    for (n, ((m, t), p)) in r.matches.iter().zip(&r.totals).zip(&r.precisions).enumerate() {
        out.push_str(&format!("{},{m},{t},{p}\n", n + 1));
    }
    out.push_str(&format!("score,,,{}\nbrevity_penalty,,,{}\n", r.score, r.brevity_penalty));
    out
}

fn signif_csv(r: &SignificanceResult) -> String {
    format!(
        "samples,bleu_a,bleu_b,wins_a,wins_b,ties,p_value,alpha,significant\n{},{},{},{},{},{},{},{},{}\n",
        r.samples, r.bleu_a, r.bleu_b, r.wins_a, r.wins_b, r.ties, r.p_value, r.alpha, r.significant
    )
}

fn report_csv(r: &ExperimentReport) -> String {
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    format!(
        "config_hash,src_level,tgt_level,train_pairs,test_pairs,max_len,src_vocab,tgt_vocab,parameters,steps,train_loss,train_accuracy,train_bleu,test_bleu\n\
         {},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        r.config_hash,
        r.src_level,
        r.tgt_level,
        r.train_pairs,
        r.test_pairs,
        r.max_len,
        r.src_vocab,
        r.tgt_vocab,
        r.parameters,
        r.steps,
        r.train_loss,
        r.train_accuracy,
        opt(r.train_bleu.as_ref().map(|b| b.score)),
        opt(r.test_bleu.as_ref().map(|b| b.score)),
    )
}

fn print_report(format: Format, r: &ExperimentReport) {
    match format {
        Format::Json => print_json(r),
        Format::Csv => print!("{}", report_csv(r)),
        Format::Text => {
            println!("{} -> {}: {} training pairs, max length {}", r.src_level, r.tgt_level, r.train_pairs, r.max_len);
            println!("vocabulary {} / {}, {} parameters, {} steps", r.src_vocab, r.tgt_vocab, r.parameters, r.steps);
            println!("train loss {:.4}, token accuracy {:.4}", r.train_loss, r.train_accuracy);
            if let Some(b) = &r.train_bleu {
                println!("train {b}");
            }
            if let Some(b) = &r.test_bleu {
                println!("test  {b}");
            }
            if let Some(s) = &r.significance {
                println!("vs baseline: p = {:.4} (significant: {})", s.p_value, s.significant);
            }
        }
    }
}

fn train(args: TrainArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    macro_rules! set {
        ($($field:ident => $target:expr),*) => {
            $(if let Some(v) = args.$field { $target = v; })*
        };
    }
    set!(emb => config.emb, hidden => config.hidden, layers => config.layers, attention => config.attention,
         optimizer => config.train.optimizer, learning_rate => config.train.learning_rate,
         steps => config.train.total_steps, batch_size => config.train.batch_size,
         dropout => config.train.dropout, seed => config.seed, log_every => config.train.log_every);
    if args.clip_norm.is_some() {
        config.train.clip_norm = args.clip_norm;
    }
    let shared = args.shared_vocab || config.shared_vocab;

    let src = read_symbol_lines(&args.src)?;
    let tgt = read_symbol_lines(&args.tgt)?;
    if src.len() != tgt.len() {
        bail!("{} source lines but {} target lines", src.len(), tgt.len());
    }
    let (src, tgt): (Vec<_>, Vec<_>) = src.into_iter().zip(tgt).filter(|(s, t)| !s.is_empty() && !t.is_empty()).unzip();
    let (src_vocab, tgt_vocab) = if shared {
        let v = Vocab::build(&[&src, &tgt], None);
        (v.clone(), v)
    } else {
        (Vocab::build(&[&src], None), Vocab::build(&[&tgt], None))
    };
    let examples: Vec<Example> =
        src.iter().zip(&tgt).map(|(s, t)| Example::new(src_vocab.encode(s), tgt_vocab.encode(t))).collect();
    let dims = Dims {
        src_vocab: src_vocab.len(),
        tgt_vocab: tgt_vocab.len(),
        emb: config.emb,
        hidden: config.hidden,
        layers: config.layers,
        shared_embeddings: shared,
        attention: config.attention,
    };
    let mut model = Seq2SeqModel::init(dims, config.seed)?;
    let mut train_config = config.train.clone();
    train_config.seed = config.seed;
    let report = nmt::train(&mut model, &examples, &train_config)?;
    let (loss, acc) = nmt::evaluate(&model, &examples)?;
    if let Some(p) = &args.loss_csv {
        let mut csv = String::from("step,loss,learning_rate\n");
        for pt in &report.loss_curve {
            csv.push_str(&format!("{},{},{}\n", pt.step, pt.loss, pt.learning_rate));
        }
        std::fs::write(p, csv).with_context(|| format!("writing {}", p.display()))?;
    }
    Checkpoint::new(model, src_vocab, tgt_vocab, report.steps)?.save(&args.output)?;
    eprintln!("{} steps, training loss {loss:.4}, token accuracy {acc:.4}", report.steps);
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let format = cli.format;
    match cli.command {
        Command::Ingest { input, out_src, out_tgt } => {
            let corpus = input.load()?;
            corpus.save(&out_src, &out_tgt)?;
            let p = &corpus.provenance;
            match format {
                Format::Json => print_json(p),
                Format::Csv => println!(
                    "origin,lines_read,dropped_empty,pairs\n{},{},{},{}",
                    p.origin,
                    p.lines_read,
                    p.dropped_empty,
                    corpus.len()
                ),
                Format::Text => println!(
                    "{}: {} lines, {} pairs, {} dropped (empty side)",
                    p.origin,
                    p.lines_read,
                    corpus.len(),
                    p.dropped_empty
                ),
            }
        }
        Command::Split { input, dev, test, seed, out_dir } => {
            let corpus = input.load()?;
            let split = corpus.split(dev, test, seed)?;
            std::fs::create_dir_all(&out_dir)?;
            for (name, part) in [("train", &split.train), ("dev", &split.dev), ("test", &split.test)] {
                part.save(out_dir.join(format!("{name}.src")), out_dir.join(format!("{name}.tgt")))?;
            }
            println!("train {} / dev {} / test {}", split.train.len(), split.dev.len(), split.test.len());
        }
        Command::Filter { src, tgt, coverage, out_src, out_tgt } => {
            let s = read_symbol_lines(&src)?;
            let t = read_symbol_lines(&tgt)?;
            if s.len() != t.len() {
                bail!("{} source lines but {} target lines", s.len(), t.len());
            }
            let lengths: Vec<(usize, usize)> = s.iter().zip(&t).map(|(a, b)| (a.len(), b.len())).collect();
            let (max_len, keep) = length_filter(&lengths, coverage);
            let pick = |v: Vec<Vec<String>>| -> Vec<Vec<String>> {
                v.into_iter().zip(&keep).filter(|(_, k)| **k).map(|(x, _)| x).collect()
            };
            write_symbol_lines(&out_src, &pick(s))?;
            write_symbol_lines(&out_tgt, &pick(t))?;
            let dropped = keep.iter().filter(|k| !**k).count();
            println!("max_len {max_len}, kept {}, dropped {dropped}", keep.len() - dropped);
        }
        Command::Transform { input, output, level, inverse, lenient } => {
            let codec = level.codec()?;
            if inverse {
                let lines = read_symbol_lines(&input)?;
                let text: Vec<String> = lines.iter().map(|l| codec.decode(l, lenient)).collect::<Result<_, _>>()?;
                write_lines(&output, &text)?;
            } else {
                let lines = read_lines(&input)?;
                let streams: Vec<Vec<String>> = lines.iter().map(|l| codec.base(l)).collect::<Result<_, _>>()?;
                write_symbol_lines(&output, &streams)?;
            }
        }
        Command::BpeTrain { input, vocab_size, output, shared, vocab_report } => {
            if shared && input.len() != 2 {
                bail!("--shared needs exactly two inputs (source and target side)");
            }
            let mut streams = Vec::new();
            for p in &input {
                streams.extend(read_symbol_lines(p)?);
            }
            let model = BpeModel::train(&streams, vocab_size)?;
            model.save(&output)?;
            let report = model.vocab_report();
            if let Some(p) = vocab_report {
                std::fs::write(&p, report.to_csv()).with_context(|| format!("writing {}", p.display()))?;
            }
            println!(
                "{} merges, vocabulary {} ({} base, {} merged)",
                model.rules().len(),
                report.vocab_size(),
                report.base_count,
                report.merged_count
            );
        }
        Command::BpeApply { model, input, output, shared } => {
            if input.len() != output.len() {
                bail!("{} inputs but {} outputs", input.len(), output.len());
            }
            if shared && input.len() != 2 {
                bail!("--shared needs the source and the target side");
            }
            if !shared && input.len() != 1 {
                bail!("several inputs need --shared");
            }
            let model = BpeModel::load(&model)?;
            for (i, o) in input.iter().zip(&output) {
                write_symbol_lines(o, &model.apply_corpus(&read_symbol_lines(i)?))?;
            }
        }
        Command::Train(args) => train(args)?,
        Command::Translate { model, input, output, decode, max_len } => {
            let ck = Checkpoint::load(&model)?;
            let lines = read_symbol_lines(&input)?;
            let out: Vec<Vec<String>> = lines
                .iter()
                .map(|l| {
                    let ids = ck.src_vocab.encode(l);
                    let limit = max_len.unwrap_or(2 * ids.len() + 10);
                    nmt::translate(&ck.model, &ids, decode, limit)
                        .into_iter()
                        .map(|id| {
                            if id == nmt::UNK {
                                UNKNOWN_GRAPHEME.to_string()
                            } else {
                                ck.tgt_vocab.symbol(id).to_string()
                            }
                        })
                        .collect()
                })
                .collect();
            write_symbol_lines(&output, &out)?;
        }
        Command::Decode { input, output, level, segmented, strict } => {
            let codec = level.codec()?;
            let mut text = Vec::new();
            for line in read_symbol_lines(&input)? {
                let base = match (segmented, strict) {
                    (false, _) => line,
                    (true, true) => desegment(&line)?,
                    (true, false) => desegment_lenient(&line),
                };
                text.push(codec.decode(&base, !strict)?);
            }
            write_lines(&output, &text)?;
        }
        Command::Bleu { hyp, reference, bleu: args } => {
            let r = bleu(&read_lines(&hyp)?, &read_lines(&reference)?, args.options(), &args.tokenizer)?;
            match format {
                Format::Json => print_json(&r),
                Format::Csv => print!("{}", bleu_csv(&r)),
                Format::Text => println!("{r}"),
            }
        }
        Command::Signif { hyp_a, hyp_b, reference, alpha, samples, seed, bleu: args } => {
            let options = BootstrapOptions { samples, alpha, seed, bleu: args.options() };
            let r = bootstrap_significance(
                &read_lines(&hyp_a)?,
                &read_lines(&hyp_b)?,
                &read_lines(&reference)?,
                options,
                &args.tokenizer,
            )?;
            match format {
                Format::Json => print_json(&r),
                Format::Csv => print!("{}", signif_csv(&r)),
                Format::Text => println!(
                    "A {:.2} vs B {:.2}: A wins {}, B wins {}, ties {} of {}; p = {:.5}, {} at alpha {}",
                    r.bleu_a,
                    r.bleu_b,
                    r.wins_a,
                    r.wins_b,
                    r.ties,
                    r.samples,
                    r.p_value,
                    if r.significant { "significant" } else { "not significant" },
                    r.alpha
                ),
            }
        }
        Command::Stats { input, table, bpe_vocab, char_split } => {
            let table = table.map(DecompositionTable::from_path).transpose()?;
            let corpus: Vec<Vec<String>> = read_lines(&input)?.iter().map(|l| tokenize(l, char_split)).collect();
            let r = stats_report(&corpus, table.as_ref(), bpe_vocab)?;
            match format {
                Format::Json => print_json(&r),
                Format::Csv => print!("{}", r.to_csv()),
                Format::Text => print!("{r}"),
            }
        }
        Command::Run { config, manifest, output } => {
            if let Some(m) = manifest {
                let (report, differing) = reproduce(&m, output.as_deref())?;
                print_report(format, &report);
                if !differing.is_empty() {
                    eprintln!("artifacts differ from the manifest: {}", differing.join(", "));
                    return Ok(ExitCode::FAILURE);
                }
                eprintln!("all artifacts match the manifest");
            } else {
                let config = ExperimentConfig::load(config.expect("required by clap"))?;
                let report = run_experiment(&config)?;
                print_report(format, &report);
            }
        }
        Command::Synth { kind, table, out_dir, pairs, chars, seed } => {
            let table = DecompositionTable::from_path(&table)?;
            std::fs::create_dir_all(&out_dir)?;
            match kind {
                SynthKind::Copy => {
                    let corpus = synth::copy_corpus(&table, pairs, chars, seed);
                    corpus.save(out_dir.join("train.src"), out_dir.join("train.tgt"))?;
                }
                SynthKind::SharedRadical => {
                    let spec = synth::SharedRadicalSpec { seed, ..Default::default() };
                    let c = synth::shared_radical_corpus(&table, spec);
                    c.train.save(out_dir.join("train.src"), out_dir.join("train.tgt"))?;
                    c.test.save(out_dir.join("test.src"), out_dir.join("test.tgt"))?;
                    write_lines(&out_dir.join("held_out.txt"), &c.held_out)?;
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
