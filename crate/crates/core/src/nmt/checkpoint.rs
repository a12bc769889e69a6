use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{Dims, Seq2SeqModel};
use super::vocab::Vocab;
use super::NmtError;

const FORMAT: &str = "subchar-nmt-checkpoint";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Record {
    format: String,
    version: u32,
    dims: Dims,
    step: usize,
    src_vocab_hash: String,
    tgt_vocab_hash: String,
    src_vocab: Vec<String>,
    tgt_vocab: Vec<String>,
    tensors: Vec<TensorRecord>,
}

/// A model together with the vocabularies it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Seq2SeqModel,
    pub src_vocab: Vocab,
    pub tgt_vocab: Vocab,
    /// Training steps applied so far.
    pub step: usize,
}

impl Checkpoint {
    pub fn new(model: Seq2SeqModel, src_vocab: Vocab, tgt_vocab: Vocab, step: usize) -> Result<Self, NmtError> {
        let ck = Checkpoint { model, src_vocab, tgt_vocab, step };
        ck.check_vocab()?;
        Ok(ck)
    }

    fn check_vocab(&self) -> Result<(), NmtError> {
        let d = &self.model.dims;
        if d.src_vocab != self.src_vocab.len() || d.tgt_vocab != self.tgt_vocab.len() {
            return Err(NmtError::Checkpoint(format!(
                "model expects vocabularies of {}/{} symbols, got {}/{}",
                d.src_vocab,
                d.tgt_vocab,
                self.src_vocab.len(),
                self.tgt_vocab.len()
            )));
        }
        if d.shared_embeddings && self.src_vocab != self.tgt_vocab {
            return Err(NmtError::Checkpoint("shared embeddings with different vocabularies".into()));
        }
        Ok(())
    }

    /// JSON document with dims, vocabularies and their hashes, step count
    /// and every tensor.
    pub fn to_json(&self) -> String {
        let record = Record {
            format: FORMAT.into(),
            version: VERSION,
            dims: self.model.dims,
            step: self.step,
            src_vocab_hash: self.src_vocab.hash(),
            tgt_vocab_hash: self.tgt_vocab.hash(),
            src_vocab: self.src_vocab.symbols().to_vec(),
            tgt_vocab: self.tgt_vocab.symbols().to_vec(),
            tensors: self
                .model
                .tensors()
                .into_iter()
                .map(|(name, t)| TensorRecord { name, shape: t.shape().to_vec(), data: t.iter().copied().collect() })
                .collect(),
        };
        serde_json::to_string(&record).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, NmtError> {
        let record: Record = serde_json::from_str(text).map_err(|e| NmtError::Checkpoint(e.to_string()))?;
        if record.format != FORMAT || record.version != VERSION {
            return Err(NmtError::Checkpoint(format!("unsupported format {} v{}", record.format, record.version)));
        }
        record.dims.validate()?;
        let src_vocab = Vocab::from_symbols(record.src_vocab)?;
        let tgt_vocab = Vocab::from_symbols(record.tgt_vocab)?;
        if src_vocab.hash() != record.src_vocab_hash || tgt_vocab.hash() != record.tgt_vocab_hash {
            return Err(NmtError::Checkpoint("vocabulary hash mismatch".into()));
        }
        let mut model = Seq2SeqModel::zeros(record.dims);
        {
            let mut slots = model.tensors_mut();
            if slots.len() != record.tensors.len() {
                return Err(NmtError::Checkpoint(format!(
                    "expected {} tensors, found {}",
                    slots.len(),
                    record.tensors.len()
                )));
            }
            for ((name, slot), t) in slots.iter_mut().zip(record.tensors) {
                if *name != t.name || slot.shape() != t.shape.as_slice() || slot.len() != t.data.len() {
                    return Err(NmtError::Checkpoint(format!(
                        "tensor `{}` {:?} does not match expected `{name}` {:?}",
                        t.name,
                        t.shape,
                        slot.shape()
                    )));
                }
                slot.iter_mut().zip(t.data).for_each(|(a, b)| *a = b);
            }
        }
        if !model.all_finite() {
            return Err(NmtError::Checkpoint("non-finite parameter".into()));
        }
        Checkpoint::new(model, src_vocab, tgt_vocab, record.step)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NmtError> {
        std::fs::write(path, self.to_json()).map_err(|e| NmtError::Io(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NmtError> {
        let text = std::fs::read_to_string(path).map_err(|e| NmtError::Io(e.to_string()))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nmt::model::AttentionKind;

    #[test]
    fn round_trip_and_validation() {
        let src = Vocab::from_symbols(["a", "b"].map(String::from)).unwrap();
        let tgt = Vocab::from_symbols(["x", "y", "z"].map(String::from)).unwrap();
        let dims = Dims {
            src_vocab: 6,
            tgt_vocab: 7,
            emb: 3,
            hidden: 4,
            layers: 2,
            shared_embeddings: false,
            attention: AttentionKind::Plain,
        };
        let ck = Checkpoint::new(Seq2SeqModel::init(dims, 3).unwrap(), src.clone(), tgt.clone(), 42).unwrap();
        let back = Checkpoint::from_json(&ck.to_json()).unwrap();
        assert_eq!(back, ck);

        let tampered = ck.to_json().replace("\"step\":42", "\"step\":42,\"x\":0").replace("\"emb\":3", "\"emb\":2");
        assert!(Checkpoint::from_json(&tampered).is_err());
        assert!(Checkpoint::new(Seq2SeqModel::init(dims, 3).unwrap(), tgt, src, 0).is_err());
    }
}
