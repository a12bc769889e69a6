use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::NmtError;

/// Range of the uniform initializer.
pub const INIT_SCALE: f64 = 0.1;

/// Additive attention scoring variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttentionKind {
    /// `v . tanh(Wq q + Wk k + b)`
    Plain,
    /// Same, with `v` replaced by `g * v / |v|` for a learned scalar `g`.
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub src_vocab: usize,
    pub tgt_vocab: usize,
    pub emb: usize,
    pub hidden: usize,
    pub layers: usize,
    pub shared_embeddings: bool,
    pub attention: AttentionKind,
}

impl Dims {
    pub fn validate(&self) -> Result<(), NmtError> {
        if self.src_vocab == 0 || self.tgt_vocab == 0 {
            return Err(NmtError::Shape("vocabulary size must be positive".into()));
        }
        if self.emb == 0 || self.hidden == 0 || self.layers == 0 {
            return Err(NmtError::Shape("dimensions must be positive".into()));
        }
        if self.shared_embeddings && self.src_vocab != self.tgt_vocab {
            return Err(NmtError::Shape("shared embeddings need one vocabulary".into()));
        }
        Ok(())
    }
}

/// Weights of one LSTM layer. Gate blocks are ordered input, forget, output,
/// candidate along the columns.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w_x: Array2<f64>,
    pub w_h: Array2<f64>,
    pub b: Array1<f64>,
}

impl LstmParams {
    fn zeros(input: usize, hidden: usize) -> Self {
        LstmParams {
            w_x: Array2::zeros((input, 4 * hidden)),
            w_h: Array2::zeros((hidden, 4 * hidden)),
            b: Array1::zeros(4 * hidden),
        }
    }
}

/// Encoder-decoder parameters. The same struct also holds gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Seq2SeqModel {
    pub dims: Dims,
    pub src_emb: Array2<f64>,
    /// `None` when source and target share `src_emb`.
    pub tgt_emb: Option<Array2<f64>>,
    pub encoder: Vec<LstmParams>,
    pub decoder: Vec<LstmParams>,
    pub att_query: Array2<f64>,
    pub att_keys: Array2<f64>,
    pub att_bias: Array1<f64>,
    pub att_v: Array1<f64>,
    /// Scale `g` of the normalized score vector (one element).
    pub att_gain: Array1<f64>,
    /// Combines `[decoder state; context]` into the attentional output.
    pub combine_w: Array2<f64>,
    pub combine_b: Array1<f64>,
    pub out_w: Array2<f64>,
    pub out_b: Array1<f64>,
}

impl Seq2SeqModel {
    /// All-zero parameters of the given shape.
    pub fn zeros(dims: Dims) -> Self {
        let (e, h) = (dims.emb, dims.hidden);
        let layer = |l: usize| LstmParams::zeros(if l == 0 { e } else { h }, h);
        Seq2SeqModel {
            dims,
            src_emb: Array2::zeros((dims.src_vocab, e)),
            tgt_emb: (!dims.shared_embeddings).then(|| Array2::zeros((dims.tgt_vocab, e))),
            encoder: (0..dims.layers).map(layer).collect(),
            decoder: (0..dims.layers).map(layer).collect(),
            att_query: Array2::zeros((h, h)),
            att_keys: Array2::zeros((h, h)),
            att_bias: Array1::zeros(h),
            att_v: Array1::zeros(h),
            att_gain: Array1::zeros(1),
            combine_w: Array2::zeros((2 * h, h)),
            combine_b: Array1::zeros(h),
            out_w: Array2::zeros((h, dims.tgt_vocab)),
            out_b: Array1::zeros(dims.tgt_vocab),
        }
    }

    /// Parameters drawn uniformly from `[-0.1, 0.1]` with a seeded generator.
    pub fn init(dims: Dims, seed: u64) -> Result<Self, NmtError> {
        dims.validate()?;
        let mut model = Self::zeros(dims);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Uniform::new_inclusive(-INIT_SCALE, INIT_SCALE);
        for (_, mut t) in model.tensors_mut() {
            t.iter_mut().for_each(|x| *x = dist.sample(&mut rng));
        }
        Ok(model)
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.dims)
    }

    pub fn tgt_embedding(&self) -> &Array2<f64> {
        self.tgt_emb.as_ref().unwrap_or(&self.src_emb)
    }

    pub fn tgt_embedding_mut(&mut self) -> &mut Array2<f64> {
        match self.tgt_emb {
            Some(ref mut t) => t,
            None => &mut self.src_emb,
        }
    }

    /// Named views of every tensor, in a fixed order.
    pub fn tensors(&self) -> Vec<(String, ArrayViewD<'_, f64>)> {
        let mut out = vec![("src_emb".to_string(), self.src_emb.view().into_dyn())];
        if let Some(t) = &self.tgt_emb {
            out.push(("tgt_emb".into(), t.view().into_dyn()));
        }
        for (side, layers) in [("encoder", &self.encoder), ("decoder", &self.decoder)] {
            for (l, p) in layers.iter().enumerate() {
                out.push((format!("{side}.{l}.w_x"), p.w_x.view().into_dyn()));
                out.push((format!("{side}.{l}.w_h"), p.w_h.view().into_dyn()));
                out.push((format!("{side}.{l}.b"), p.b.view().into_dyn()));
            }
        }
        out.extend([
            ("att_query".to_string(), self.att_query.view().into_dyn()),
            ("att_keys".into(), self.att_keys.view().into_dyn()),
            ("att_bias".into(), self.att_bias.view().into_dyn()),
            ("att_v".into(), self.att_v.view().into_dyn()),
            ("att_gain".into(), self.att_gain.view().into_dyn()),
            ("combine_w".into(), self.combine_w.view().into_dyn()),
            ("combine_b".into(), self.combine_b.view().into_dyn()),
            ("out_w".into(), self.out_w.view().into_dyn()),
            ("out_b".into(), self.out_b.view().into_dyn()),
        ]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, ArrayViewMutD<'_, f64>)> {
        let mut out = vec![("src_emb".to_string(), self.src_emb.view_mut().into_dyn())];
        if let Some(t) = &mut self.tgt_emb {
            out.push(("tgt_emb".into(), t.view_mut().into_dyn()));
        }
        for (side, layers) in [("encoder", &mut self.encoder), ("decoder", &mut self.decoder)] {
            for (l, p) in layers.iter_mut().enumerate() {
                out.push((format!("{side}.{l}.w_x"), p.w_x.view_mut().into_dyn()));
                out.push((format!("{side}.{l}.w_h"), p.w_h.view_mut().into_dyn()));
                out.push((format!("{side}.{l}.b"), p.b.view_mut().into_dyn()));
            }
        }
        out.extend([
            ("att_query".to_string(), self.att_query.view_mut().into_dyn()),
            ("att_keys".into(), self.att_keys.view_mut().into_dyn()),
            ("att_bias".into(), self.att_bias.view_mut().into_dyn()),
            ("att_v".into(), self.att_v.view_mut().into_dyn()),
            ("att_gain".into(), self.att_gain.view_mut().into_dyn()),
            ("combine_w".into(), self.combine_w.view_mut().into_dyn()),
            ("combine_b".into(), self.combine_b.view_mut().into_dyn()),
            ("out_w".into(), self.out_w.view_mut().into_dyn()),
            ("out_b".into(), self.out_b.view_mut().into_dyn()),
        ]);
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &Seq2SeqModel, scale: f64) {
        let theirs = other.tensors();
        for ((_, mut mine), (_, t)) in self.tensors_mut().into_iter().zip(theirs) {
            mine.zip_mut_with(&t, |a, &b| *a += scale * b);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for (_, mut t) in self.tensors_mut() {
            t.mapv_inplace(|x| x * factor);
        }
    }

    pub fn squared_norm(&self) -> f64 {
        self.tensors().iter().map(|(_, t)| t.iter().map(|x| x * x).sum::<f64>()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|x| x.is_finite()))
    }

    /// SHA-256 over tensor names and the little-endian bits of every value.
    pub fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        for (name, t) in self.tensors() {
            hasher.update(name.as_bytes());
            for x in t.iter() {
                hasher.update(x.to_bits().to_le_bytes());
            }
        }
        hex::encode(hasher.finalize())
    }

    /// The score vector actually used by attention: `v`, or `g * v / |v|`.
    pub fn score_vector(&self) -> Array1<f64> {
        match self.dims.attention {
            AttentionKind::Plain => self.att_v.clone(),
            AttentionKind::Normalized => {
                let norm = self.att_v.dot(&self.att_v).sqrt();
                &self.att_v * (self.att_gain[0] / norm)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims(shared: bool) -> Dims {
        Dims {
            src_vocab: 9,
            tgt_vocab: 9,
            emb: 3,
            hidden: 4,
            layers: 2,
            shared_embeddings: shared,
            attention: AttentionKind::Normalized,
        }
    }

    #[test]
    fn seeded_init_is_deterministic_and_bounded() {
        let a = Seq2SeqModel::init(dims(false), 7).unwrap();
        let b = Seq2SeqModel::init(dims(false), 7).unwrap();
        let c = Seq2SeqModel::init(dims(false), 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.tensors().iter().all(|(_, t)| t.iter().all(|x| x.abs() <= INIT_SCALE)));
    }

    #[test]
    fn shared_flag_keeps_one_table() {
        let m = Seq2SeqModel::init(dims(true), 1).unwrap();
        assert!(m.tgt_emb.is_none());
        assert!(std::ptr::eq(m.tgt_embedding(), &m.src_emb));
        assert!(m.tensors().iter().all(|(n, _)| n != "tgt_emb"));
    }

    #[test]
    fn invalid_dims_are_rejected() {
        let mut d = dims(false);
        d.tgt_vocab = 0;
        assert!(Seq2SeqModel::init(d, 0).is_err());
        let mut d = dims(true);
        d.tgt_vocab = 5;
        assert!(Seq2SeqModel::init(d, 0).is_err());
    }
}
