use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::model::Seq2SeqModel;
use super::network::{backward, forward, Example};
use super::NmtError;

/// Denominator floor for the relative error, so parameters whose true
/// gradient is (numerically) zero are compared in absolute terms.
const DENOMINATOR_FLOOR: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Tensor name and flat index of the worst entry.
    pub worst: (String, usize),
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

fn loss(model: &Seq2SeqModel, batch: &[Example]) -> Result<f64, NmtError> {
    Ok(forward::<ChaCha8Rng>(model, batch, None)?.loss)
}

/// Compares [`backward`] with central differences `(L(w+e) - L(w-e)) / 2e`
/// on every parameter, dropout off. The relative error of an entry is
/// `|a - n| / max(|a|, |n|, 1e-7)`.
pub fn grad_check(model: &Seq2SeqModel, batch: &[Example], epsilon: f64) -> Result<GradCheckReport, NmtError> {
    let out = forward::<ChaCha8Rng>(model, batch, None)?;
    let grads = backward(model, &out.cache);
    let mut entries = Vec::new();
    for (t, (name, g)) in grads.tensors().into_iter().enumerate() {
        for (i, &a) in g.iter().enumerate() {
            entries.push((t, name.clone(), i, a));
        }
    }
    let results: Vec<(f64, String, usize, f64, f64)> = entries
        .into_par_iter()
        .map(|(t, name, i, a)| {
            let mut probe = model.clone();
            let set = |m: &mut Seq2SeqModel, delta: f64| {
                let mut tensors = m.tensors_mut();
                let x = tensors[t].1.iter_mut().nth(i).expect("index in range");
                *x += delta;
            };
            set(&mut probe, epsilon);
            let plus = loss(&probe, batch)?;
            set(&mut probe, -2.0 * epsilon);
            let minus = loss(&probe, batch)?;
            let n = (plus - minus) / (2.0 * epsilon);
            let err = (a - n).abs() / a.abs().max(n.abs()).max(DENOMINATOR_FLOOR);
            Ok((err, name, i, a, n))
        })
        .collect::<Result<_, NmtError>>()?;
    let checked = results.len();
    let worst = results
        .into_iter()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| NmtError::Input("model has no parameters".into()))?;
    Ok(GradCheckReport {
        max_relative_error: worst.0,
        worst: (worst.1, worst.2),
        analytic: worst.3,
        numeric: worst.4,
        checked,
    })
}
