use std::path::PathBuf;

use subchar::pipeline::ExperimentConfig;

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn shipped_configs_parse() {
    let full = config("full-scale.conf");
    assert_eq!((full.emb, full.hidden, full.bpe_vocab), (300, 512, 8000));
    assert_eq!(full.train.total_steps, 250_000);
    let builtin = ExperimentConfig::full_scale();
    assert_eq!((builtin.emb, builtin.hidden, builtin.bpe_vocab), (full.emb, full.hidden, full.bpe_vocab));
    assert_eq!(builtin.train.learning_rate, full.train.learning_rate);
    assert_eq!(builtin.train.batch_size, full.train.batch_size);
}

#[test]
fn desk_configs_share_a_budget() {
    let a = config("desk-ideograph.conf");
    let b = config("desk-char.conf");
    assert_eq!(a.train, b.train);
    assert_eq!((a.emb, a.hidden, a.layers, a.attention), (b.emb, b.hidden, b.layers, b.attention));
    assert_ne!(a.src_level, b.src_level);
}
