use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn table() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/common_table.tsv")
}

fn subchar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subchar")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = subchar(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn ingest_reports_drops_and_rejects_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = dir.path().join("c.tsv");
    std::fs::write(&tsv, "森林\t林\n木\t\n山\t山\n").unwrap();
    let (s, t) = (dir.path().join("o.src"), dir.path().join("o.tgt"));
    let out = ok(&["--format", "json", "ingest", "--tsv", p(&tsv), "--out-src", p(&s), "--out-tgt", p(&t)]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["dropped_empty"], 1);
    assert_eq!(std::fs::read_to_string(&s).unwrap(), "森林\n山\n");

    let short = dir.path().join("short.tgt");
    std::fs::write(&short, "一\n").unwrap();
    let out = subchar(&["ingest", "--src", p(&s), "--tgt", p(&short), "--out-src", p(&s), "--out-tgt", p(&t)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("mismatch"));
}

#[test]
fn staged_pipeline_round_trips_text() {
    let dir = tempfile::tempdir().unwrap();
    let d = |n: &str| dir.path().join(n);
    let text = "森林 木材 中国\n好 山水\n日本 語\n";
    std::fs::write(d("text"), text).unwrap();
    let table = table();
    let level = ["--level", "ideograph", "--table", p(&table)];

    ok(&[&["transform", "--input", p(&d("text")), "--output", p(&d("base"))][..], &level].concat());
    let base = std::fs::read_to_string(d("base")).unwrap();
    assert!(base.starts_with("木 木 木 </c0> 木 木 </c0> ▁"), "{base}");

    ok(&["bpe-train", "--input", p(&d("base")), "--vocab-size", "30", "--output", p(&d("bpe"))]);
    ok(&["bpe-apply", "--model", p(&d("bpe")), "--input", p(&d("base")), "--output", p(&d("seg"))]);
    ok(&[&["decode", "--input", p(&d("seg")), "--output", p(&d("back")), "--segmented", "--strict"][..], &level]
        .concat());
    assert_eq!(std::fs::read_to_string(d("back")).unwrap(), text);

    ok(&[&["transform", "--inverse", "--input", p(&d("base")), "--output", p(&d("back2"))][..], &level].concat());
    assert_eq!(std::fs::read_to_string(d("back2")).unwrap(), text);
}

#[test]
fn shared_bpe_needs_both_sides() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("a");
    std::fs::write(&f, "a b ▁ a b\n").unwrap();
    let m = dir.path().join("m");
    let out = subchar(&["bpe-train", "--shared", "--input", p(&f), "--vocab-size", "4", "--output", p(&m)]);
    assert!(!out.status.success());
    ok(&["bpe-train", "--shared", "--input", p(&f), "--input", p(&f), "--vocab-size", "4", "--output", p(&m)]);
    let o = dir.path().join("o");
    ok(&[
        "bpe-apply",
        "--shared",
        "--model",
        p(&m),
        "--input",
        p(&f),
        "--output",
        p(&o),
        "--input",
        p(&f),
        "--output",
        p(&o),
    ]);
    assert_eq!(std::fs::read_to_string(&o).unwrap(), "ab ▁ ab\n");
}

#[test]
fn bleu_and_significance_reports() {
    let dir = tempfile::tempdir().unwrap();
    let refs = dir.path().join("ref");
    std::fs::write(&refs, "the cat sat on the mat\na b c d e\n").unwrap();
    let out = ok(&["--format", "json", "bleu", "--hyp", p(&refs), "--ref", p(&refs)]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["score"], 100.0);
    assert!(ok(&["--format", "csv", "bleu", "--hyp", p(&refs), "--ref", p(&refs)]).starts_with("n,matches"));

    let out = ok(&[
        "--format",
        "json",
        "signif",
        "--hyp-a",
        p(&refs),
        "--hyp-b",
        p(&refs),
        "--ref",
        p(&refs),
        "--samples",
        "50",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["significant"], false);
    assert_eq!(v["p_value"], 1.0);
}

#[test]
fn stats_in_every_format() {
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/sample_corpus.txt");
    let table = table();
    let csv = ok(&["--format", "csv", "stats", "--input", p(&corpus), "--table", p(&table)]);
    assert!(csv.starts_with("level,vocab_size"));
    assert!(csv.lines().any(|l| l.starts_with("ideograph,")));
    let text = ok(&["stats", "--input", p(&corpus), "--table", p(&table)]);
    assert!(text.contains("1000 sentences"));
}

#[test]
fn train_translate_decode() {
    let dir = tempfile::tempdir().unwrap();
    let d = |n: &str| dir.path().join(n);
    std::fs::write(d("src"), "a b ▁ c\nb c\nc ▁ a\n").unwrap();
    let model = d("model.json");
    ok(&[
        "train",
        "--src",
        p(&d("src")),
        "--tgt",
        p(&d("src")),
        "--output",
        p(&model),
        "--steps",
        "5",
        "--emb",
        "4",
        "--hidden",
        "6",
        "--loss-csv",
        p(&d("loss.csv")),
    ]);
    assert!(std::fs::read_to_string(d("loss.csv")).unwrap().starts_with("step,loss"));
    ok(&["translate", "--model", p(&model), "--input", p(&d("src")), "--output", p(&d("hyp")), "--decode", "beam:2"]);
    assert_eq!(std::fs::read_to_string(d("hyp")).unwrap().lines().count(), 3);
    ok(&["decode", "--input", p(&d("hyp")), "--output", p(&d("text")), "--level", "char"]);
    assert_eq!(std::fs::read_to_string(d("text")).unwrap().lines().count(), 3);
}

#[test]
fn run_and_reproduce_from_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let d = |n: &str| dir.path().join(n);
    ok(&["synth", "copy", "--table", p(&table()), "--out-dir", p(dir.path()), "--pairs", "40", "--chars", "10"]);
    let table = table();
    let config = format!(
        "src = train.src\ntgt = train.tgt\ntable = {}\nsrc_level = ideograph\ntgt_level = ideograph\n\
         bpe_vocab = 40\ndev_size = 5\ntest_size = 5\nemb = 4\nhidden = 6\nsteps = 10\nbatch_size = 4\noutput = run1\n",
        p(&table)
    );
    std::fs::write(d("exp.conf"), config).unwrap();
    let out = ok(&["--format", "json", "run", "--config", p(&d("exp.conf"))]);
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["steps"], 10);
    assert!(d("run1/manifest.json").exists());

    ok(&["run", "--manifest", p(&d("run1/manifest.json")), "--output", p(&d("run2"))]);
    assert_eq!(std::fs::read(d("run1/test.hyp")).unwrap(), std::fs::read(d("run2/test.hyp")).unwrap());
}

#[test]
fn bad_config_names_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    std::fs::write(&conf, "tsv = x.tsv\nsrc_level = char\ntgt_level = word\nshared_vocab = true\n").unwrap();
    let out = subchar(&["run", "--config", p(&conf)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("shared"));
}
