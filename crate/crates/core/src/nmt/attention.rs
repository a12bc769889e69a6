//! Additive (Bahdanau) attention.

use ndarray::{Array1, Array2, ArrayView1, Axis};

use super::model::Seq2SeqModel;

/// Attention distribution of one decoder state over encoder states (rows of
/// `keys`): `softmax_i(u . tanh(Wq q + Wk k_i + b))`, where `u` is the
/// model's score vector.
pub fn attention_weights(model: &Seq2SeqModel, query: ArrayView1<f64>, keys: &Array2<f64>) -> Array1<f64> {
    let projected_query = query.dot(&model.att_query) + &model.att_bias;
    let projected_keys = keys.dot(&model.att_keys);
    let u = model.score_vector();
    let scores: Array1<f64> =
        projected_keys.axis_iter(Axis(0)).map(|k| (&k + &projected_query).mapv(f64::tanh).dot(&u)).collect();
    softmax(&scores)
}

pub(crate) fn softmax(scores: &Array1<f64>) -> Array1<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp = scores.mapv(|s| (s - max).exp());
    let total = exp.sum();
    exp / total
}

/// Row-wise softmax restricted to entries where `mask` is 1; masked entries
/// get probability 0.
pub(crate) fn masked_softmax_rows(scores: &Array2<f64>, mask: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(scores.raw_dim());
    for ((s, m), mut o) in scores.outer_iter().zip(mask.outer_iter()).zip(out.outer_iter_mut()) {
        let max = s.iter().zip(m.iter()).filter(|(_, &m)| m > 0.0).map(|(&s, _)| s).fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for ((o, &s), &m) in o.iter_mut().zip(s.iter()).zip(m.iter()) {
            if m > 0.0 {
                *o = (s - max).exp();
                total += *o;
            }
        }
        o.mapv_inplace(|v| v / total);
    }
    out
}
