use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::lstm;
use super::model::Seq2SeqModel;
use super::network::{argmax, attend, encode, gather_rows, output_layer, project_keys};
use super::vocab::{BOS, EOS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecodeMode {
    Greedy,
    Beam(usize),
}

impl std::str::FromStr for DecodeMode {
    type Err = String;

    /// `greedy` or `beam:K`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "greedy" => Ok(DecodeMode::Greedy),
            Some(("beam", k)) => match k.parse() {
                Ok(k) if k > 0 => Ok(DecodeMode::Beam(k)),
                _ => Err(format!("invalid beam width `{k}`")),
            },
            _ => Err(format!("unknown decode mode `{s}` (expected greedy or beam:K)")),
        }
    }
}

impl std::fmt::Display for DecodeMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DecodeMode::Greedy => f.write_str("greedy"),
            DecodeMode::Beam(k) => write!(f, "beam:{k}"),
        }
    }
}

struct Context {
    keys: Vec<Array2<f64>>,
    projected: Vec<Array2<f64>>,
    src_mask: Array2<f64>,
    u: Array1<f64>,
}

#[derive(Clone)]
struct Hypothesis {
    tokens: Vec<usize>,
    score: f64,
    h: Vec<Array2<f64>>,
    c: Vec<Array2<f64>>,
}

/// Runs the decoder one step for a single hypothesis and returns the new
/// state and the log-probabilities of the next symbol.
fn step(model: &Seq2SeqModel, ctx: &Context, hyp: &Hypothesis) -> (Vec<Array2<f64>>, Vec<Array2<f64>>, Array1<f64>) {
    let last = hyp.tokens.last().copied().unwrap_or(BOS);
    let mut x = gather_rows(model.tgt_embedding(), &[last]);
    let mut h = hyp.h.clone();
    let mut c = hyp.c.clone();
    for (l, p) in model.decoder.iter().enumerate() {
        let (hn, cn, _) = lstm::forward(p, x, &h[l], &c[l], None);
        h[l] = hn;
        c[l] = cn;
        x = h[l].clone();
    }
    let (_, _, context) = attend(model, &ctx.u, &x, &ctx.keys, &ctx.projected, &ctx.src_mask);
    let (_, _, probs) = output_layer(model, &x, &context);
    let logp = probs.row(0).mapv(f64::ln);
    (h, c, logp)
}

/// Translates one id sequence. The result excludes the end-of-sentence
/// marker. An empty source yields an empty translation.
pub fn translate(model: &Seq2SeqModel, src: &[usize], mode: DecodeMode, max_len: usize) -> Vec<usize> {
    if src.is_empty() || max_len == 0 {
        return Vec::new();
    }
    let src: Vec<usize> =
        src.iter().map(|&id| if id < model.dims.src_vocab { id } else { super::vocab::UNK }).collect();
    let enc = encode(model, &[&src]);
    let ctx = Context {
        projected: project_keys(model, &enc.keys),
        keys: enc.keys,
        src_mask: enc.src_mask,
        u: model.score_vector(),
    };
    let start = Hypothesis { tokens: Vec::new(), score: 0.0, h: enc.h, c: enc.c };
    match mode {
        DecodeMode::Greedy => greedy(model, &ctx, start, max_len),
        DecodeMode::Beam(k) => beam(model, &ctx, start, k.max(1), max_len),
    }
}

fn greedy(model: &Seq2SeqModel, ctx: &Context, mut hyp: Hypothesis, max_len: usize) -> Vec<usize> {
    while hyp.tokens.len() < max_len {
        let (h, c, logp) = step(model, ctx, &hyp);
        let best = argmax(logp.iter().copied());
        if best == EOS {
            break;
        }
        hyp.tokens.push(best);
        hyp.h = h;
        hyp.c = c;
    }
    hyp.tokens
}

fn beam(model: &Seq2SeqModel, ctx: &Context, start: Hypothesis, width: usize, max_len: usize) -> Vec<usize> {
    let mut alive = vec![start];
    let mut finished: Option<(Vec<usize>, f64)> = None;
    for _ in 0..max_len {
        // (score, hypothesis index, step log-probability, token)
        let mut candidates: Vec<(f64, usize, f64, usize)> = Vec::new();
        let mut states = Vec::with_capacity(alive.len());
        for (i, hyp) in alive.iter().enumerate() {
            let (h, c, logp) = step(model, ctx, hyp);
            candidates.extend(logp.iter().enumerate().map(|(tok, &lp)| (hyp.score + lp, i, lp, tok)));
            states.push((h, c));
        }
        candidates
            .sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(b.2.total_cmp(&a.2)).then(a.3.cmp(&b.3)));
        let mut next = Vec::with_capacity(width);
        for (score, i, _, tok) in candidates.into_iter().take(width) {
            if tok == EOS {
                if finished.as_ref().is_none_or(|f| score > f.1) {
                    finished = Some((alive[i].tokens.clone(), score));
                }
            } else {
                let mut tokens = alive[i].tokens.clone();
                tokens.push(tok);
                next.push(Hypothesis { tokens, score, h: states[i].0.clone(), c: states[i].1.clone() });
            }
        }
        alive = next;
        // scores only decrease, so no live hypothesis can overtake
        let best_alive = alive.first().map_or(f64::NEG_INFINITY, |h| h.score);
        if alive.is_empty() || finished.as_ref().is_some_and(|f| f.1 >= best_alive) {
            break;
        }
    }
    match finished {
        Some((tokens, score)) if alive.first().is_none_or(|h| score >= h.score) => tokens,
        _ => alive.into_iter().next().map(|h| h.tokens).unwrap_or_default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nmt::model::{AttentionKind, Dims};

    #[test]
    fn modes_parse() {
        assert_eq!("greedy".parse::<DecodeMode>().unwrap(), DecodeMode::Greedy);
        assert_eq!("beam:4".parse::<DecodeMode>().unwrap(), DecodeMode::Beam(4));
        assert!("beam:0".parse::<DecodeMode>().is_err());
        assert!("sample".parse::<DecodeMode>().is_err());
        assert_eq!(DecodeMode::Beam(3).to_string(), "beam:3");
    }

    #[test]
    fn beam_of_one_is_greedy() {
        let dims = Dims {
            src_vocab: 12,
            tgt_vocab: 10,
            emb: 5,
            hidden: 6,
            layers: 2,
            shared_embeddings: false,
            attention: AttentionKind::Normalized,
        };
        for seed in 0..5 {
            let mut m = Seq2SeqModel::init(dims, seed).unwrap();
            // sharpen the output so sequences are not all immediate stops
            m.out_w *= 30.0;
            let src: Vec<usize> = (0..6).map(|i| 4 + (i * 7 + seed as usize) % 8).collect();
            let g = translate(&m, &src, DecodeMode::Greedy, 12);
            assert_eq!(translate(&m, &src, DecodeMode::Beam(1), 12), g);
            assert!(translate(&m, &[], DecodeMode::Greedy, 12).is_empty());
        }
    }
}
