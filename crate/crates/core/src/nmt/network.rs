//! Teacher-forced forward pass over a batch and its exact reverse-mode
//! gradient.

use ndarray::linalg::general_mat_mul;
use ndarray::{concatenate, s, Array1, Array2, Axis};
use rand::Rng;

use super::attention::masked_softmax_rows;
use super::lstm::{self, LstmStep};
use super::model::{AttentionKind, Seq2SeqModel};
use super::vocab::{BOS, EOS, PAD};
use super::NmtError;

/// One training example: source ids and target ids, both without markers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub src: Vec<usize>,
    pub tgt: Vec<usize>,
}

impl Example {
    pub fn new(src: Vec<usize>, tgt: Vec<usize>) -> Self {
        Example { src, tgt }
    }
}

/// Inverted dropout on layer inputs.
pub struct Dropout<'a, R: Rng> {
    pub rate: f64,
    pub rng: &'a mut R,
}

struct DecoderStep {
    layers: Vec<LstmStep>,
    drops: Vec<Option<Array2<f64>>>,
    input_ids: Vec<usize>,
    state: Array2<f64>,
    pre: Vec<Array2<f64>>,
    alpha: Array2<f64>,
    combined_in: Array2<f64>,
    combined: Array2<f64>,
    probs: Array2<f64>,
    gold: Vec<usize>,
    valid: Vec<bool>,
}

struct EncoderStep {
    layers: Vec<LstmStep>,
    drops: Vec<Option<Array2<f64>>>,
    input_ids: Vec<usize>,
}

/// Intermediate values recorded by [`forward`], including dropout masks.
pub struct Cache {
    encoder: Vec<EncoderStep>,
    decoder: Vec<DecoderStep>,
    keys: Vec<Array2<f64>>,
    tokens: usize,
}

pub struct ForwardOutput {
    /// Mean cross-entropy per target token (end-of-sentence included).
    pub loss: f64,
    pub tokens: usize,
    /// Target positions whose argmax prediction is the gold symbol.
    pub correct: usize,
    /// Attention of every example: `target steps x source positions`,
    /// trimmed to the example's lengths.
    pub attention: Vec<Array2<f64>>,
    pub cache: Cache,
}

fn validate(model: &Seq2SeqModel, batch: &[Example]) -> Result<(), NmtError> {
    if batch.is_empty() {
        return Err(NmtError::Input("empty batch".into()));
    }
    for (n, ex) in batch.iter().enumerate() {
        if ex.src.is_empty() {
            return Err(NmtError::Input(format!("example {n}: empty source")));
        }
        if ex.tgt.is_empty() {
            return Err(NmtError::Input(format!("example {n}: empty target")));
        }
        if let Some(&id) = ex.src.iter().find(|&&id| id >= model.dims.src_vocab) {
            return Err(NmtError::IdOutOfRange { id, size: model.dims.src_vocab });
        }
        if let Some(&id) = ex.tgt.iter().find(|&&id| id >= model.dims.tgt_vocab) {
            return Err(NmtError::IdOutOfRange { id, size: model.dims.tgt_vocab });
        }
    }
    Ok(())
}

pub(crate) fn gather_rows(table: &Array2<f64>, ids: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((ids.len(), table.ncols()));
    for (mut row, &id) in out.outer_iter_mut().zip(ids) {
        row.assign(&table.row(id));
    }
    out
}

fn scatter_rows(table: &mut Array2<f64>, ids: &[usize], grads: &Array2<f64>) {
    for (&id, g) in ids.iter().zip(grads.outer_iter()) {
        let mut row = table.row_mut(id);
        row += &g;
    }
}

fn apply_dropout<R: Rng>(x: &mut Array2<f64>, dropout: &mut Option<Dropout<'_, R>>) -> Option<Array2<f64>> {
    let d = dropout.as_mut()?;
    if d.rate <= 0.0 {
        return None;
    }
    let keep = 1.0 - d.rate;
    let mask = Array2::from_shape_simple_fn(x.raw_dim(), || if d.rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 });
    *x *= &mask;
    Some(mask)
}

/// Encoder and decoder states from running the encoder over padded sources.
pub(crate) struct Encoded {
    pub keys: Vec<Array2<f64>>,
    pub h: Vec<Array2<f64>>,
    pub c: Vec<Array2<f64>>,
    pub src_mask: Array2<f64>,
}

fn run_encoder<R: Rng>(
    model: &Seq2SeqModel,
    sources: &[&[usize]],
    dropout: &mut Option<Dropout<'_, R>>,
    record: Option<&mut Vec<EncoderStep>>,
) -> Encoded {
    let batch = sources.len();
    let hidden = model.dims.hidden;
    let steps = sources.iter().map(|s| s.len()).max().unwrap_or(0);
    let src_mask = Array2::from_shape_fn((batch, steps), |(b, t)| if t < sources[b].len() { 1.0 } else { 0.0 });
    let mut h = vec![Array2::zeros((batch, hidden)); model.dims.layers];
    let mut c = h.clone();
    let mut keys = Vec::with_capacity(steps);
    let mut record = record;
    for t in 0..steps {
        let ids: Vec<usize> = sources.iter().map(|s| s.get(t).copied().unwrap_or(PAD)).collect();
        let mask = src_mask.slice(s![.., t..t + 1]).to_owned();
        let mut x = gather_rows(&model.src_emb, &ids);
        let mut layers = Vec::new();
        let mut drops = Vec::new();
        for (l, p) in model.encoder.iter().enumerate() {
            if l > 0 {
                x = h[l - 1].clone();
            }
            drops.push(apply_dropout(&mut x, dropout));
            let (hn, cn, step) = lstm::forward(p, x, &h[l], &c[l], Some(&mask));
            h[l] = hn;
            c[l] = cn;
            layers.push(step);
            x = Array2::zeros((0, 0));
        }
        keys.push(h[model.dims.layers - 1].clone());
        if let Some(rec) = record.as_deref_mut() {
            rec.push(EncoderStep { layers, drops, input_ids: ids });
        }
    }
    Encoded { keys, h, c, src_mask }
}

/// Encodes a batch of sources for inference (no dropout).
pub(crate) fn encode(model: &Seq2SeqModel, sources: &[&[usize]]) -> Encoded {
    run_encoder::<rand::rngs::ThreadRng>(model, sources, &mut None, None)
}

/// Projected keys `K Wk`, one matrix per source position.
pub(crate) fn project_keys(model: &Seq2SeqModel, keys: &[Array2<f64>]) -> Vec<Array2<f64>> {
    keys.iter().map(|k| k.dot(&model.att_keys)).collect()
}

/// Attention for a batch of decoder states. Returns `(pre-activations per
/// source position, weights, context)`.
pub(crate) fn attend(
    model: &Seq2SeqModel,
    u: &Array1<f64>,
    state: &Array2<f64>,
    keys: &[Array2<f64>],
    projected: &[Array2<f64>],
    src_mask: &Array2<f64>,
) -> (Vec<Array2<f64>>, Array2<f64>, Array2<f64>) {
    let batch = state.nrows();
    let q = state.dot(&model.att_query) + &model.att_bias;
    let mut scores = Array2::zeros((batch, keys.len()));
    let mut pre = Vec::with_capacity(keys.len());
    for (t, pk) in projected.iter().enumerate() {
        let a = (&q + pk).mapv(f64::tanh);
        scores.column_mut(t).assign(&a.dot(u));
        pre.push(a);
    }
    let alpha = masked_softmax_rows(&scores, src_mask);
    let mut ctx = Array2::zeros((batch, model.dims.hidden));
    for (t, k) in keys.iter().enumerate() {
        let w = alpha.column(t).insert_axis(Axis(1));
        ctx += &(k * &w);
    }
    (pre, alpha, ctx)
}

/// Output distribution from the top decoder state and its context.
pub(crate) fn output_layer(
    model: &Seq2SeqModel,
    state: &Array2<f64>,
    ctx: &Array2<f64>,
) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let combined_in = concatenate(Axis(1), &[state.view(), ctx.view()]).expect("same batch");
    let combined = (combined_in.dot(&model.combine_w) + &model.combine_b).mapv(f64::tanh);
    let mut logits = combined.dot(&model.out_w) + &model.out_b;
    for mut row in logits.outer_iter_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let total = row.sum();
        row /= total;
    }
    (combined_in, combined, logits)
}

/// Teacher-forced forward pass. Dropout is applied to every LSTM layer input
/// when `dropout` is given; the masks are kept for [`backward`].
pub fn forward<R: Rng>(
    model: &Seq2SeqModel,
    batch: &[Example],
    mut dropout: Option<Dropout<'_, R>>,
) -> Result<ForwardOutput, NmtError> {
    validate(model, batch)?;
    let sources: Vec<&[usize]> = batch.iter().map(|e| e.src.as_slice()).collect();
    let mut enc_steps = Vec::new();
    let enc = run_encoder(model, &sources, &mut dropout, Some(&mut enc_steps));
    let projected = project_keys(model, &enc.keys);
    let u = model.score_vector();
    let tgt_table = model.tgt_embedding();

    let bsz = batch.len();
    let steps = batch.iter().map(|e| e.tgt.len() + 1).max().unwrap_or(0);
    let mut h = enc.h.clone();
    let mut c = enc.c.clone();
    let mut dec_steps = Vec::with_capacity(steps);
    let (mut loss, mut tokens, mut correct) = (0.0, 0usize, 0usize);

    for j in 0..steps {
        let input_ids: Vec<usize> =
            batch.iter().map(|e| if j == 0 { BOS } else { e.tgt.get(j - 1).copied().unwrap_or(PAD) }).collect();
        let gold: Vec<usize> = batch
            .iter()
            .map(|e| match j.cmp(&e.tgt.len()) {
                std::cmp::Ordering::Less => e.tgt[j],
                std::cmp::Ordering::Equal => EOS,
                std::cmp::Ordering::Greater => PAD,
            })
            .collect();
        let valid: Vec<bool> = batch.iter().map(|e| j <= e.tgt.len()).collect();

        let mut x = gather_rows(tgt_table, &input_ids);
        let mut layers = Vec::new();
        let mut drops = Vec::new();
        for (l, p) in model.decoder.iter().enumerate() {
            if l > 0 {
                x = h[l - 1].clone();
            }
            drops.push(apply_dropout(&mut x, &mut dropout));
            let (hn, cn, step) = lstm::forward(p, x, &h[l], &c[l], None);
            h[l] = hn;
            c[l] = cn;
            layers.push(step);
            x = Array2::zeros((0, 0));
        }
        let state = h[model.dims.layers - 1].clone();
        let (pre, alpha, ctx) = attend(model, &u, &state, &enc.keys, &projected, &enc.src_mask);
        let (combined_in, combined, probs) = output_layer(model, &state, &ctx);

        for b in 0..bsz {
            if !valid[b] {
                continue;
            }
            let row = probs.row(b);
            loss -= row[gold[b]].ln();
            tokens += 1;
            let best = argmax(row.iter().copied());
            if best == gold[b] {
                correct += 1;
            }
        }
        dec_steps.push(DecoderStep {
            layers,
            drops,
            input_ids,
            state,
            pre,
            alpha,
            combined_in,
            combined,
            probs,
            gold,
            valid,
        });
    }

    let attention = batch
        .iter()
        .enumerate()
        .map(|(b, e)| Array2::from_shape_fn((e.tgt.len() + 1, e.src.len()), |(j, t)| dec_steps[j].alpha[[b, t]]))
        .collect();
    Ok(ForwardOutput {
        loss: loss / tokens as f64,
        tokens,
        correct,
        attention,
        cache: Cache { encoder: enc_steps, decoder: dec_steps, keys: enc.keys, tokens },
    })
}

pub(crate) fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Gradient of the mean token loss of a [`forward`] call with respect to
/// every parameter.
pub fn backward(model: &Seq2SeqModel, cache: &Cache) -> Seq2SeqModel {
    let mut grads = model.zeros_like();
    let layers = model.dims.layers;
    let hidden = model.dims.hidden;
    let bsz = cache.keys.first().map_or(0, |k| k.nrows());
    let scale = 1.0 / cache.tokens as f64;
    let u = model.score_vector();
    let mut du = Array1::<f64>::zeros(hidden);
    let mut dkeys: Vec<Array2<f64>> = vec![Array2::zeros((bsz, hidden)); cache.keys.len()];
    let mut dprojected: Vec<Array2<f64>> = vec![Array2::zeros((bsz, hidden)); cache.keys.len()];
    let mut dh_next = vec![Array2::<f64>::zeros((bsz, hidden)); layers];
    let mut dc_next = dh_next.clone();
    let mut tgt_emb_grad = Array2::<f64>::zeros(model.tgt_embedding().raw_dim());

    for step in cache.decoder.iter().rev() {
        let mut dlogits = step.probs.clone();
        for b in 0..bsz {
            if step.valid[b] {
                dlogits[[b, step.gold[b]]] -= 1.0;
                dlogits.row_mut(b).mapv_inplace(|v| v * scale);
            } else {
                dlogits.row_mut(b).fill(0.0);
            }
        }
        general_mat_mul(1.0, &step.combined.t(), &dlogits, 1.0, &mut grads.out_w);
        grads.out_b += &dlogits.sum_axis(Axis(0));
        let dcombined = dlogits.dot(&model.out_w.t());
        let dpre_c = dcombined * &step.combined.mapv(|a| 1.0 - a * a);
        general_mat_mul(1.0, &step.combined_in.t(), &dpre_c, 1.0, &mut grads.combine_w);
        grads.combine_b += &dpre_c.sum_axis(Axis(0));
        let dcombined_in = dpre_c.dot(&model.combine_w.t());
        let mut dstate = dcombined_in.slice(s![.., 0..hidden]).to_owned();
        let dctx = dcombined_in.slice(s![.., hidden..]);

        // context = sum_t alpha_t k_t
        let mut dalpha = Array2::<f64>::zeros(step.alpha.raw_dim());
        for (t, k) in cache.keys.iter().enumerate() {
            let a = step.alpha.column(t);
            for b in 0..bsz {
                dalpha[[b, t]] = dctx.row(b).dot(&k.row(b));
                let w = a[b];
                if w != 0.0 {
                    let mut row = dkeys[t].row_mut(b);
                    row.scaled_add(w, &dctx.row(b));
                }
            }
        }
        // softmax
        let weighted: Array1<f64> = (&step.alpha * &dalpha).sum_axis(Axis(1));
        let dscores = &step.alpha * &(&dalpha - &weighted.insert_axis(Axis(1)));
        // scores_t = tanh(q + P_t) . u
        let mut dq = Array2::<f64>::zeros((bsz, hidden));
        for (t, pre) in step.pre.iter().enumerate() {
            let ds = dscores.column(t);
            du += &pre.t().dot(&ds);
            let mut dz = pre.mapv(|a| 1.0 - a * a);
            for (mut row, &d) in dz.outer_iter_mut().zip(ds.iter()) {
                row *= &(&u * d);
            }
            dq += &dz;
            dprojected[t] += &dz;
        }
        grads.att_bias += &dq.sum_axis(Axis(0));
        general_mat_mul(1.0, &step.state.t(), &dq, 1.0, &mut grads.att_query);
        general_mat_mul(1.0, &dq, &model.att_query.t(), 1.0, &mut dstate);

        let mut dfrom_above = dstate;
        for l in (0..layers).rev() {
            let dh = &dfrom_above + &dh_next[l];
            let (mut dx, dhp, dcp) =
                lstm::backward(&model.decoder[l], &step.layers[l], &dh, &dc_next[l], &mut grads.decoder[l]);
            dh_next[l] = dhp;
            dc_next[l] = dcp;
            if let Some(mask) = &step.drops[l] {
                dx *= mask;
            }
            if l > 0 {
                dfrom_above = dx;
            } else {
                scatter_rows(&mut tgt_emb_grad, &step.input_ids, &dx);
                dfrom_above = Array2::zeros((0, 0));
            }
        }
    }

    for (t, dp) in dprojected.iter().enumerate() {
        general_mat_mul(1.0, &cache.keys[t].t(), dp, 1.0, &mut grads.att_keys);
        general_mat_mul(1.0, dp, &model.att_keys.t(), 1.0, &mut dkeys[t]);
    }

    // decoder initial state is the encoder final state
    for (t, step) in cache.encoder.iter().enumerate().rev() {
        let mut dfrom_above = std::mem::take(&mut dkeys[t]);
        for l in (0..layers).rev() {
            let dh = &dfrom_above + &dh_next[l];
            let (mut dx, dhp, dcp) =
                lstm::backward(&model.encoder[l], &step.layers[l], &dh, &dc_next[l], &mut grads.encoder[l]);
            dh_next[l] = dhp;
            dc_next[l] = dcp;
            if let Some(mask) = &step.drops[l] {
                dx *= mask;
            }
            if l > 0 {
                dfrom_above = dx;
            } else {
                scatter_rows(&mut grads.src_emb, &step.input_ids, &dx);
                dfrom_above = Array2::zeros((0, 0));
            }
        }
    }

    match grads.tgt_emb {
        Some(ref mut t) => *t += &tgt_emb_grad,
        None => grads.src_emb += &tgt_emb_grad,
    }

    match model.dims.attention {
        AttentionKind::Plain => grads.att_v += &du,
        AttentionKind::Normalized => {
            let norm = model.att_v.dot(&model.att_v).sqrt();
            let unit = &model.att_v / norm;
            let along = du.dot(&unit);
            grads.att_gain[0] += along;
            grads.att_v += &((&du - &(&unit * along)) * (model.att_gain[0] / norm));
        }
    }
    grads
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nmt::gradcheck::grad_check;
    use crate::nmt::model::Dims;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dims(layers: usize, d: usize, attention: AttentionKind, shared: bool) -> Dims {
        Dims { src_vocab: 9, tgt_vocab: 9, emb: d, hidden: d, layers, shared_embeddings: shared, attention }
    }

    fn batch() -> Vec<Example> {
        vec![
            Example::new(vec![4, 5, 6], vec![7, 8, 4]),
            Example::new(vec![8], vec![5, 6]),
            Example::new(vec![6, 7], vec![4]),
        ]
    }

    #[test]
    fn gradients_match_finite_differences() {
        for (layers, d, kind, shared) in [
            (1, 4, AttentionKind::Plain, false),
            (2, 6, AttentionKind::Plain, false),
            (2, 6, AttentionKind::Normalized, true),
        ] {
            let mut model = Seq2SeqModel::init(dims(layers, d, kind, shared), 5).unwrap();
            model.scale(5.0);
            let report = grad_check(&model, &batch(), 1e-4).unwrap();
            assert!(report.max_relative_error < 1e-4, "{layers} {d} {kind:?}: {report:?}");
        }
    }

    #[test]
    fn dropout_masks_are_replayed_by_backward() {
        let mut model = Seq2SeqModel::init(dims(2, 4, AttentionKind::Normalized, false), 2).unwrap();
        model.scale(5.0);
        let b = batch();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let out = forward(&model, &b, Some(Dropout { rate: 0.3, rng: &mut rng })).unwrap();
        let grads = backward(&model, &out.cache);
        // the same noise replayed at a perturbed parameter
        let eps = 1e-5;
        let mut probe = model.clone();
        probe.decoder[1].w_x[[0, 0]] += eps;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let plus = forward(&probe, &b, Some(Dropout { rate: 0.3, rng: &mut rng })).unwrap().loss;
        probe.decoder[1].w_x[[0, 0]] -= 2.0 * eps;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let minus = forward(&probe, &b, Some(Dropout { rate: 0.3, rng: &mut rng })).unwrap().loss;
        let numeric = (plus - minus) / (2.0 * eps);
        assert!((numeric - grads.decoder[1].w_x[[0, 0]]).abs() < 1e-7);
    }

    #[test]
    fn attention_rows_sum_to_one_and_respect_lengths() {
        let model = Seq2SeqModel::init(dims(2, 5, AttentionKind::Normalized, false), 1).unwrap();
        let out = forward::<ChaCha8Rng>(&model, &batch(), None).unwrap();
        for (a, ex) in out.attention.iter().zip(batch()) {
            assert_eq!(a.dim(), (ex.tgt.len() + 1, ex.src.len()));
            for row in a.outer_iter() {
                assert!((row.sum() - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(out.tokens, 4 + 3 + 2);
    }

    #[test]
    fn initial_loss_is_near_uniform() {
        let mut d = dims(2, 8, AttentionKind::Normalized, false);
        d.tgt_vocab = 40;
        let model = Seq2SeqModel::init(d, 3).unwrap();
        let out = forward::<ChaCha8Rng>(&model, &batch(), None).unwrap();
        let expected = 40f64.ln();
        assert!((out.loss - expected).abs() < 0.1 * expected);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let model = Seq2SeqModel::init(dims(1, 4, AttentionKind::Plain, false), 1).unwrap();
        let run = |b: Vec<Example>| forward::<ChaCha8Rng>(&model, &b, None);
        assert!(matches!(run(vec![Example::new(vec![4], vec![])]), Err(NmtError::Input(_))));
        assert!(matches!(run(vec![Example::new(vec![4], vec![9])]), Err(NmtError::IdOutOfRange { id: 9, size: 9 })));
        assert!(run(vec![]).is_err());
    }

    #[test]
    fn shared_table_receives_both_sides() {
        let model = Seq2SeqModel::init(dims(1, 4, AttentionKind::Plain, true), 1).unwrap();
        // symbol 8 appears only as a target input, 4 only as a source
        let b = vec![Example::new(vec![4], vec![8, 5])];
        let out = forward::<ChaCha8Rng>(&model, &b, None).unwrap();
        let g = backward(&model, &out.cache);
        assert!(g.src_emb.row(8).iter().any(|x| *x != 0.0));
        assert!(g.src_emb.row(4).iter().any(|x| *x != 0.0));
        assert!(g.tgt_emb.is_none());
    }
}
