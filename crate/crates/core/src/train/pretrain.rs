//! Masked-token pretraining of a shared backbone on unlabeled report text.

use std::collections::BTreeMap;

use super::loss::cross_entropy;
use super::trainer::{fit, Objective, TrainConfig, TrainOutcome};
use crate::error::{Error, Result};
use crate::model::{
    HeadMode, Logits, Mode, ModelConfig, MultiTaskSchema, ParameterStore, TokenBatch, CLS_ID, UNK_ID,
};
use crate::numerics::{Matrix, Rng, Stream};

/// Token sequences with some positions replaced by `[UNK]`; `targets` holds
/// the original id at every masked position.
struct MaskedLm {
    inputs: Vec<Vec<u32>>,
    targets: Vec<Vec<Option<u32>>>,
    vocab_size: usize,
}

impl MaskedLm {
    fn new(sequences: &[Vec<u32>], mask_rate: f64, max_len: usize, vocab_size: usize, seed: u64) -> Result<MaskedLm> {
        let root = Rng::new(seed).derive(Stream::Other(3), 0);
        let mut inputs = Vec::with_capacity(sequences.len());
        let mut targets = Vec::with_capacity(sequences.len());
        for (i, seq) in sequences.iter().enumerate() {
            if seq.first() != Some(&CLS_ID) {
                return Err(Error::Input(format!("sequence {i} does not start with [CLS]")));
            }
            if let Some(&bad) = seq.iter().find(|&&t| t as usize >= vocab_size) {
                return Err(Error::Input(format!("sequence {i}: token id {bad} outside the vocabulary")));
            }
            let seq = &seq[..seq.len().min(max_len)];
            if seq.len() < 2 {
                continue;
            }
            let mut rng = root.derive(Stream::Other(3), i as u64);
            let mut input = seq.to_vec();
            let mut target = vec![None; seq.len()];
            for pos in 1..seq.len() {
                if rng.bernoulli(mask_rate) {
                    target[pos] = Some(seq[pos]);
                    input[pos] = UNK_ID;
                }
            }
            if target.iter().all(Option::is_none) {
                let pos = 1 + rng.below(seq.len() - 1);
                target[pos] = Some(seq[pos]);
                input[pos] = UNK_ID;
            }
            inputs.push(input);
            targets.push(target);
        }
        if inputs.is_empty() {
            return Err(Error::Input("no sequence long enough to mask".into()));
        }
        Ok(MaskedLm { inputs, targets, vocab_size })
    }
}

impl Objective for MaskedLm {
    fn len(&self) -> usize {
        self.inputs.len()
    }

    fn batch(&self, idx: &[usize]) -> TokenBatch {
        let seqs: Vec<&[u32]> = idx.iter().map(|&i| self.inputs[i].as_slice()).collect();
        TokenBatch::from_sequences(&seqs)
    }

    fn loss(&self, idx: &[usize], logits: &Logits) -> Result<(f64, Logits)> {
        let blocks = logits.blocks();
        let n_masked: usize = idx.iter().map(|&i| self.targets[i].iter().flatten().count()).sum();
        let scale = 1.0 / n_masked.max(1) as f64;
        let mut loss = 0.0;
        let mut grads = Vec::with_capacity(blocks.len());
        for (&i, block) in idx.iter().zip(blocks) {
            let n = block.cols();
            let mut g = vec![0.0; block.data().len()];
            for (pos, t) in self.targets[i].iter().enumerate().take(block.rows()) {
                let Some(t) = t else { continue };
                let (l, dg) = cross_entropy(block.row(pos), *t as usize);
                loss += l * scale;
                g[pos * n..(pos + 1) * n].iter_mut().zip(dg).for_each(|(a, b)| *a = b * scale);
            }
            grads.push(Matrix::from_vec(block.rows(), n, g)?);
        }
        Ok((loss, Logits::Token(grads)))
    }

    /// Accuracy on the masked positions.
    fn evaluate(&self, params: &ParameterStore, idx: &[usize]) -> Result<BTreeMap<String, f64>> {
        let (mut hit, mut total) = (0usize, 0usize);
        for chunk in idx.chunks(64) {
            let fwd = params.forward(&self.batch(chunk), Mode::Eval, false)?;
            for (&i, block) in chunk.iter().zip(fwd.logits.blocks()) {
                for (pos, t) in self.targets[i].iter().enumerate().take(block.rows()) {
                    let Some(t) = t else { continue };
                    let row = block.row(pos);
                    let best = (0..self.vocab_size).fold(0, |b, k| if row[k] > row[b] { k } else { b });
                    hit += usize::from(best == *t as usize);
                    total += 1;
                }
            }
        }
        Ok(BTreeMap::from([("masked_lm".to_string(), hit as f64 / total.max(1) as f64)]))
    }
}

/// Pretrains a backbone by predicting masked tokens (`mask_rate` of the
/// non-`[CLS]` positions, at least one per sequence). Early stopping
/// watches masked-token accuracy; the returned store carries one
/// vocabulary-wide token head, to be dropped by
/// [`ParameterStore::adopt_backbone`].
pub fn pretrain_masked_lm(
    sequences: &[Vec<u32>],
    model: &ModelConfig,
    cfg: &TrainConfig,
    mask_rate: f64,
) -> Result<TrainOutcome> {
    if !(mask_rate > 0.0 && mask_rate < 1.0) {
        return Err(Error::Config(format!("mask_rate {mask_rate} outside (0, 1)")));
    }
    let model = ModelConfig {
        head_mode: HeadMode::TokenClassifier,
        schema: MultiTaskSchema::new(&[("masked_lm", model.vocab_size)]),
        ..model.clone()
    };
    let data = MaskedLm::new(sequences, mask_rate, model.max_seq_len, model.vocab_size, cfg.seed)?;
    let strata = vec![0usize; data.len()];
    fit(&data, None, &model, cfg, &strata, "masked_lm")
}
