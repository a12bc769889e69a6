//! Batched LSTM cell, forward and backward.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, Axis, Zip};

use super::model::LstmParams;

/// Constant added to the forget-gate pre-activation.
pub const FORGET_BIAS: f64 = 1.0;

/// Everything the backward pass needs from one cell application.
#[derive(Debug, Clone)]
pub(crate) struct LstmStep {
    pub x: Array2<f64>,
    pub h_prev: Array2<f64>,
    pub c_prev: Array2<f64>,
    pub i: Array2<f64>,
    pub f: Array2<f64>,
    pub o: Array2<f64>,
    pub g: Array2<f64>,
    pub tanh_c: Array2<f64>,
    /// Rows with mask 0 keep their previous state (padding).
    pub mask: Option<Array2<f64>>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One step for a batch (rows). Returns the new `(h, c)` and the cache.
pub(crate) fn forward(
    p: &LstmParams,
    x: Array2<f64>,
    h_prev: &Array2<f64>,
    c_prev: &Array2<f64>,
    mask: Option<&Array2<f64>>,
) -> (Array2<f64>, Array2<f64>, LstmStep) {
    let hidden = h_prev.ncols();
    let mut z = x.dot(&p.w_x);
    general_mat_mul(1.0, h_prev, &p.w_h, 1.0, &mut z);
    z += &p.b;

    let i = z.slice(s![.., 0..hidden]).mapv(sigmoid);
    let f = z.slice(s![.., hidden..2 * hidden]).mapv(|v| sigmoid(v + FORGET_BIAS));
    let o = z.slice(s![.., 2 * hidden..3 * hidden]).mapv(sigmoid);
    let g = z.slice(s![.., 3 * hidden..]).mapv(f64::tanh);

    let mut c = &f * c_prev + &i * &g;
    let tanh_c = c.mapv(f64::tanh);
    let mut h = &o * &tanh_c;
    if let Some(m) = mask {
        // h = m * h + (1 - m) * h_prev, same for c
        Zip::from(&mut h).and(h_prev).and_broadcast(m).for_each(|h, &hp, &m| *h = m * *h + (1.0 - m) * hp);
        Zip::from(&mut c).and(c_prev).and_broadcast(m).for_each(|c, &cp, &m| *c = m * *c + (1.0 - m) * cp);
    }
    let step = LstmStep { x, h_prev: h_prev.clone(), c_prev: c_prev.clone(), i, f, o, g, tanh_c, mask: mask.cloned() };
    (h, c, step)
}

/// Backpropagates `dh`/`dc` (gradients w.r.t. the step's outputs) through the
/// cell, accumulating weight gradients into `grads`. Returns `(dx, dh_prev,
/// dc_prev)`.
pub(crate) fn backward(
    p: &LstmParams,
    step: &LstmStep,
    dh: &Array2<f64>,
    dc: &Array2<f64>,
    grads: &mut LstmParams,
) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let (batch, hidden) = dh.dim();
    let (dh_cell, dc_cell, carry_h, carry_c) = match &step.mask {
        Some(m) => (dh * m, dc * m, dh * &m.mapv(|v| 1.0 - v), dc * &m.mapv(|v| 1.0 - v)),
        None => (dh.clone(), dc.clone(), Array2::zeros((batch, hidden)), Array2::zeros((batch, hidden))),
    };

    let mut dz = Array2::zeros((batch, 4 * hidden));
    let mut dc_prev = carry_c;
    for r in 0..batch {
        for k in 0..hidden {
            let (i, f, o, g, tc) =
                (step.i[[r, k]], step.f[[r, k]], step.o[[r, k]], step.g[[r, k]], step.tanh_c[[r, k]]);
            let dhr = dh_cell[[r, k]];
            let dct = dc_cell[[r, k]] + dhr * o * (1.0 - tc * tc);
            let d_o = dhr * tc;
            let d_i = dct * g;
            let d_g = dct * i;
            let d_f = dct * step.c_prev[[r, k]];
            dc_prev[[r, k]] += dct * f;
            dz[[r, k]] = d_i * i * (1.0 - i);
            dz[[r, hidden + k]] = d_f * f * (1.0 - f);
            dz[[r, 2 * hidden + k]] = d_o * o * (1.0 - o);
            dz[[r, 3 * hidden + k]] = d_g * (1.0 - g * g);
        }
    }

    general_mat_mul(1.0, &step.x.t(), &dz, 1.0, &mut grads.w_x);
    general_mat_mul(1.0, &step.h_prev.t(), &dz, 1.0, &mut grads.w_h);
    grads.b += &dz.sum_axis(Axis(0));
    let dx = dz.dot(&p.w_x.t());
    let mut dh_prev = carry_h;
    general_mat_mul(1.0, &dz, &p.w_h.t(), 1.0, &mut dh_prev);
    (dx, dh_prev, dc_prev)
}
