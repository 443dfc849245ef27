use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::data::{SequenceDataset, TokenExample};
use super::loss::{cross_entropy, multi_task_loss, TaskLoss};
use super::optim::{clip_flat, lr_at, AdamW, Scheduler};
use super::split::{stratified_split, Split};
use crate::analysis::macro_f1;
use crate::error::{Error, Result};
use crate::model::{
    argmax_rows, init_model, param_groups, write_gradient_set, GradientSet, HeadMode, Logits,
    ModelConfig, Mode, MultiTaskSchema, ParameterStore, TokenBatch,
};
use crate::numerics::{Matrix, Rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EarlyStopping {
    /// Epochs without improvement of the mean validation macro-F1 before
    /// training stops.
    pub patience: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_peak: f64,
    pub weight_decay: f64,
    pub grad_clip_norm: f64,
    pub scheduler: Scheduler,
    pub early_stopping: EarlyStopping,
    pub val_fraction: f64,
    pub seed: u64,
    /// Keep every raw mini-batch gradient in the outcome (memory heavy).
    pub dump_batch_gradients: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::single_task()
    }
}

impl TrainConfig {
    pub fn single_task() -> Self {
        TrainConfig {
            epochs: 6,
            batch_size: 16,
            lr_peak: 3e-4,
            weight_decay: 1e-4,
            grad_clip_norm: 2.0,
            scheduler: Scheduler::Linear,
            early_stopping: EarlyStopping { patience: 2 },
            val_fraction: 0.2,
            seed: 0,
            dump_batch_gradients: false,
        }
    }

    /// Multi-task preset: larger clip and the 3:2 learning-rate ratio over
    /// the single-task preset.
    pub fn multi_task() -> Self {
        TrainConfig { epochs: 11, lr_peak: 4.5e-4, grad_clip_norm: 5.0, ..TrainConfig::single_task() }
    }

    /// Location tagger preset.
    pub fn tagger() -> Self {
        TrainConfig { epochs: 5, weight_decay: 1e-3, ..TrainConfig::single_task() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be positive".into()));
        }
        if !(self.lr_peak > 0.0) || !(self.grad_clip_norm > 0.0) || self.weight_decay < 0.0 {
            return Err(Error::Config("lr_peak and grad_clip_norm must be positive, weight_decay non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::Config(format!("val_fraction {} outside [0, 1)", self.val_fraction)));
        }
        Ok(())
    }
}

/// Sum of the raw (unclipped) mini-batch gradients of one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochGradientSnapshot {
    pub epoch: usize,
    pub task_name: String,
    pub gradients: GradientSet,
}

impl EpochGradientSnapshot {
    pub fn file_name(&self) -> String {
        format!("grad_{}_epoch{:03}.json", self.task_name, self.epoch)
    }

    /// Writes the snapshot into `dir`; returns the manifest path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(self.file_name());
        write_gradient_set(&path, &self.gradients)?;
        Ok(path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_macro_f1: BTreeMap<String, f64>,
    pub lr: f64,
}

impl EpochRecord {
    pub fn mean_val_macro_f1(&self) -> f64 {
        self.val_macro_f1.values().sum::<f64>() / self.val_macro_f1.len().max(1) as f64
    }
}

pub fn write_history_jsonl(path: &Path, history: &[EpochRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for rec in history {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub struct TrainOutcome {
    /// Weights of the best validation epoch.
    pub params: ParameterStore,
    pub best_epoch: usize,
    pub snapshots: Vec<EpochGradientSnapshot>,
    pub history: Vec<EpochRecord>,
    /// Per-epoch lists of raw batch gradients; empty unless requested.
    pub batch_gradients: Vec<Vec<GradientSet>>,
    pub split: Split,
}

/// What differs between sequence and token training.
pub(super) trait Objective {
    fn len(&self) -> usize;
    fn batch(&self, idx: &[usize]) -> TokenBatch;
    /// Batch loss and the gradient of that loss at the logits.
    fn loss(&self, idx: &[usize], logits: &Logits) -> Result<(f64, Logits)>;
    /// Named validation scores; their mean drives early stopping.
    fn evaluate(&self, params: &ParameterStore, idx: &[usize]) -> Result<BTreeMap<String, f64>>;
}

struct SequenceObjective<'a> {
    data: &'a SequenceDataset,
}

impl Objective for SequenceObjective<'_> {
    fn len(&self) -> usize {
        self.data.len()
    }

    fn batch(&self, idx: &[usize]) -> TokenBatch {
        let seqs: Vec<&[u32]> = idx.iter().map(|&i| self.data.examples[i].tokens.as_slice()).collect();
        TokenBatch::from_sequences(&seqs)
    }

    fn loss(&self, idx: &[usize], logits: &Logits) -> Result<(f64, Logits)> {
        let losses = self
            .data
            .schema
            .tasks
            .iter()
            .zip(logits.blocks())
            .enumerate()
            .map(|(t, (task, block))| {
                let targets: Vec<usize> = idx.iter().map(|&i| self.data.examples[i].labels[t]).collect();
                TaskLoss::from_block(&task.name, block, &targets)
            })
            .collect::<Result<Vec<_>>>()?;
        multi_task_loss(&self.data.schema, losses)
    }

    fn evaluate(&self, params: &ParameterStore, idx: &[usize]) -> Result<BTreeMap<String, f64>> {
        let scores = evaluate_sequence(params, &self.data.subset(idx))?;
        Ok(self.data.schema.tasks.iter().map(|t| t.name.clone()).zip(scores).collect())
    }
}

struct TokenObjective<'a> {
    data: &'a [TokenExample],
    max_len: usize,
}

impl Objective for TokenObjective<'_> {
    fn len(&self) -> usize {
        self.data.len()
    }

    fn batch(&self, idx: &[usize]) -> TokenBatch {
        let seqs: Vec<&[u32]> = idx.iter().map(|&i| self.data[i].tokens.as_slice()).collect();
        TokenBatch::from_sequences(&seqs)
    }

    fn loss(&self, idx: &[usize], logits: &Logits) -> Result<(f64, Logits)> {
        let blocks = logits.blocks();
        // mean over every tagged (non-[CLS]) position in the batch
        let n_tagged: usize = blocks.iter().map(|b| b.rows().saturating_sub(1)).sum();
        let scale = 1.0 / n_tagged.max(1) as f64;
        let mut loss = 0.0;
        let mut grads = Vec::with_capacity(blocks.len());
        for (&i, block) in idx.iter().zip(blocks) {
            let tags = &self.data[i].tags[..block.rows().min(self.max_len)];
            let mut g = vec![0.0; block.data().len()];
            for (pos, &tag) in tags.iter().enumerate().skip(1) {
                let (l, dg) = cross_entropy(block.row(pos), tag);
                loss += l * scale;
                let n = block.cols();
                g[pos * n..(pos + 1) * n].iter_mut().zip(dg).for_each(|(a, b)| *a = b * scale);
            }
            grads.push(Matrix::from_vec(block.rows(), block.cols(), g)?);
        }
        Ok((loss, Logits::Token(grads)))
    }

    fn evaluate(&self, params: &ParameterStore, idx: &[usize]) -> Result<BTreeMap<String, f64>> {
        let subset: Vec<TokenExample> = idx.iter().map(|&i| self.data[i].clone()).collect();
        let scores = evaluate_tokens(params, &subset)?;
        Ok(BTreeMap::from([("location".to_string(), scores.macro_f1)]))
    }
}

/// Per-task macro-F1 of `params` on `data` (schema order).
pub fn evaluate_sequence(params: &ParameterStore, data: &SequenceDataset) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::Input("evaluation set is empty".into()));
    }
    let schema = &params.config().schema;
    let cols: Vec<usize> = schema
        .tasks
        .iter()
        .map(|t| {
            data.schema
                .index_of(&t.name)
                .ok_or_else(|| Error::Input(format!("dataset has no labels for task {}", t.name)))
        })
        .collect::<Result<_>>()?;
    let preds = predict_sequences(params, data.examples.iter().map(|e| e.tokens.as_slice()))?;
    schema
        .tasks
        .iter()
        .enumerate()
        .map(|(t, task)| {
            let golds: Vec<usize> = data.examples.iter().map(|e| e.labels[cols[t]]).collect();
            macro_f1(&preds[t], &golds, task.n_classes)
        })
        .collect()
}

/// Per-task predicted classes, evaluated in chunks of 64.
pub fn predict_sequences<'a>(
    params: &ParameterStore,
    tokens: impl Iterator<Item = &'a [u32]>,
) -> Result<Vec<Vec<usize>>> {
    let n_tasks = params.config().schema.len();
    let mut out = vec![Vec::new(); n_tasks];
    let seqs: Vec<&[u32]> = tokens.collect();
    for chunk in seqs.chunks(64) {
        let preds = params.predict(&TokenBatch::from_sequences(chunk))?;
        for (o, p) in out.iter_mut().zip(preds) {
            o.extend(p);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenScores {
    /// Macro-F1 over both tags.
    pub macro_f1: f64,
    /// F1 of the Location tag alone.
    pub location_f1: f64,
}

/// Predicted tag per token (the `[CLS]` position included, truncated to the
/// model's maximum length).
pub fn predict_tags(params: &ParameterStore, tokens: &[&[u32]]) -> Result<Vec<Vec<usize>>> {
    let mut out = Vec::with_capacity(tokens.len());
    for chunk in tokens.chunks(64) {
        let fwd = params.forward(&TokenBatch::from_sequences(chunk), Mode::Eval, false)?;
        match fwd.logits {
            Logits::Token(blocks) => out.extend(blocks.iter().map(argmax_rows)),
            Logits::Sequence(_) => return Err(Error::Input("tag prediction needs a token classifier".into())),
        }
    }
    Ok(out)
}

pub fn evaluate_tokens(params: &ParameterStore, data: &[TokenExample]) -> Result<TokenScores> {
    let tokens: Vec<&[u32]> = data.iter().map(|e| e.tokens.as_slice()).collect();
    let preds = predict_tags(params, &tokens)?;
    let (mut p_all, mut g_all) = (Vec::new(), Vec::new());
    for (pred, ex) in preds.iter().zip(data) {
        p_all.extend_from_slice(&pred[1..]);
        g_all.extend_from_slice(&ex.tags[1..pred.len()]);
    }
    Ok(TokenScores {
        macro_f1: macro_f1(&p_all, &g_all, 2)?,
        location_f1: crate::analysis::positive_class_f1(&p_all, &g_all, 1)?,
    })
}

pub(super) fn fit(
    objective: &dyn Objective,
    init: Option<&ParameterStore>,
    model: &ModelConfig,
    cfg: &TrainConfig,
    strata: &[usize],
    snapshot_name: &str,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    model.validate()?;
    if objective.len() == 0 {
        return Err(Error::Input("training set is empty".into()));
    }
    let split = stratified_split(strata, cfg.val_fraction, cfg.seed)?;
    if split.train.is_empty() {
        return Err(Error::Input("no training examples left after the validation split".into()));
    }
    let eval_idx = if split.val.is_empty() {
        log::warn!("no validation examples; early stopping watches the training set");
        split.train.clone()
    } else {
        split.val.clone()
    };

    let root = Rng::new(cfg.seed);
    let mut params = init_model(model, &root)?;
    if let Some(donor) = init {
        params.adopt_backbone(donor)?;
    }
    let groups = param_groups(model);
    let mut opt = AdamW::new(params.len());
    let n_batches = split.train.len().div_ceil(cfg.batch_size);
    let total_steps = cfg.epochs * n_batches;

    let mut step = 0;
    let mut best: Option<(f64, usize, ParameterStore)> = None;
    let mut since_best = 0;
    let mut history = Vec::new();
    let mut snapshots = Vec::new();
    let mut batch_gradients = Vec::new();

    for epoch in 1..=cfg.epochs {
        let mut order = split.train.clone();
        root.derive(Stream::Shuffle, epoch as u64).shuffle(&mut order);
        let mut dropout_rng = root.derive(Stream::Dropout, epoch as u64);
        let mut epoch_sum = vec![0.0; params.len()];
        let mut epoch_batches = Vec::new();
        let mut loss_sum = 0.0;
        let mut lr = 0.0;

        for idx in order.chunks(cfg.batch_size) {
            let batch = objective.batch(idx);
            let fwd = params.forward(&batch, Mode::Train(&mut dropout_rng), false)?;
            let (loss, dlogits) = objective.loss(idx, &fwd.logits)?;
            let mut grad = params.backward_flat(&fwd.cache, &dlogits)?;
            epoch_sum.iter_mut().zip(&grad).for_each(|(s, g)| *s += g);
            if cfg.dump_batch_gradients {
                epoch_batches.push(GradientSet::from_flat(&groups, &grad));
            }
            clip_flat(&mut grad, cfg.grad_clip_norm);
            lr = lr_at(step, total_steps, cfg.lr_peak);
            opt.step(params.values_mut(), &grad, lr, cfg.weight_decay);
            if params.values().iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("parameters after step {step}")));
            }
            step += 1;
            loss_sum += loss;
        }

        snapshots.push(EpochGradientSnapshot {
            epoch,
            task_name: snapshot_name.to_string(),
            gradients: GradientSet::from_flat(&groups, &epoch_sum),
        });
        if cfg.dump_batch_gradients {
            batch_gradients.push(epoch_batches);
        }
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / n_batches as f64,
            val_macro_f1: objective.evaluate(&params, &eval_idx)?,
            lr,
        };
        let score = record.mean_val_macro_f1();
        log::info!("{snapshot_name} epoch {epoch}: loss {:.4} val macro-F1 {score:.4}", record.train_loss);
        history.push(record);
        if best.as_ref().is_none_or(|(b, _, _)| score > *b) {
            best = Some((score, epoch, params.clone()));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.early_stopping.patience {
                log::info!("{snapshot_name}: early stop after epoch {epoch}");
                break;
            }
        }
    }

    let (_, best_epoch, params) = best.expect("at least one epoch ran");
    Ok(TrainOutcome { params, best_epoch, snapshots, history, batch_gradients, split })
}

fn first_task_strata(data: &SequenceDataset) -> Vec<usize> {
    data.examples.iter().map(|e| e.labels[0]).collect()
}

/// Trains a one-head model for `task`. The validation split is stratified on
/// the dataset's first task, so every task of one dataset sees the same
/// split at a given seed.
pub fn train_single_task(
    data: &SequenceDataset,
    task: &str,
    model: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    fine_tune_single_task(None, data, task, model, cfg)
}

/// [`train_single_task`] starting from the backbone of `backbone` (a
/// pretrained store) instead of a fresh draw; heads are always fresh.
pub fn fine_tune_single_task(
    backbone: Option<&ParameterStore>,
    data: &SequenceDataset,
    task: &str,
    model: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    if data.is_empty() {
        return Err(Error::Input("training set is empty".into()));
    }
    let strata = first_task_strata(data);
    let single = data.only(task)?;
    let model = ModelConfig {
        head_mode: HeadMode::SequenceClassifier,
        schema: single.schema.clone(),
        ..model.clone()
    };
    fit(&SequenceObjective { data: &single }, backbone, &model, cfg, &strata, task)
}

/// Trains one shared backbone with a head per schema task; losses are summed
/// per batch and one optimizer step is taken per batch.
pub fn train_multi_task(data: &SequenceDataset, model: &ModelConfig, cfg: &TrainConfig) -> Result<TrainOutcome> {
    fine_tune_multi_task(None, data, model, cfg)
}

pub fn fine_tune_multi_task(
    backbone: Option<&ParameterStore>,
    data: &SequenceDataset,
    model: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    if data.is_empty() {
        return Err(Error::Input("training set is empty".into()));
    }
    let model = ModelConfig {
        head_mode: HeadMode::SequenceClassifier,
        schema: data.schema.clone(),
        ..model.clone()
    };
    fit(&SequenceObjective { data }, backbone, &model, cfg, &first_task_strata(data), "multi")
}

/// Trains the Location/Other tagger. Examples are stratified on whether they
/// contain any Location tag.
pub fn train_token_classifier(
    data: &[TokenExample],
    model: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    let schema = MultiTaskSchema::location_tagger();
    for ex in data {
        ex.validate(2)?;
    }
    let model = ModelConfig { head_mode: HeadMode::TokenClassifier, schema, ..model.clone() };
    let strata: Vec<usize> = data.iter().map(|e| usize::from(e.tags.contains(&1))).collect();
    let objective = TokenObjective { data, max_len: model.max_seq_len };
    fit(&objective, None, &model, cfg, &strata, "location")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parameter_count;
    use crate::train::SequenceExample;

    fn tiny() -> ModelConfig {
        ModelConfig {
            vocab_size: 16,
            max_seq_len: 8,
            d_model: 8,
            n_layers: 1,
            n_heads: 2,
            d_ff: 16,
            dropout_p: 0.1,
            ..Default::default()
        }
    }

    /// Label of every task is a function of which marker token appears.
    fn separable(n: usize, seed: u64) -> SequenceDataset {
        let mut rng = Rng::new(seed);
        let examples = (0..n)
            .map(|_| {
                let sev = rng.below(3) as usize;
                let mut tokens = vec![0];
                for _ in 0..4 {
                    tokens.push(8 + rng.below(8) as u32);
                }
                let at = 1 + rng.below(4) as usize;
                tokens[at] = 4 + sev as u32;
                SequenceExample { tokens, labels: vec![sev, sev, usize::from(sev > 0)] }
            })
            .collect();
        SequenceDataset::new(MultiTaskSchema::lumbar(), examples).unwrap()
    }

    fn quick() -> TrainConfig {
        TrainConfig { epochs: 5, lr_peak: 1e-2, seed: 3, ..TrainConfig::single_task() }
    }

    #[test]
    fn single_task_learns_and_is_deterministic() {
        let data = separable(200, 1);
        let a = train_single_task(&data, "stenosis", &tiny(), &quick()).unwrap();
        let losses: Vec<f64> = a.history.iter().map(|r| r.train_loss).collect();
        assert!(losses[1] < losses[0] && losses[2] < losses[1], "{losses:?}");
        assert_eq!(a.snapshots.len(), a.history.len());
        assert_eq!(a.snapshots[0].gradients.keys(), param_groups(a.params.config()).iter().map(|g| g.key).collect::<Vec<_>>());
        let b = train_single_task(&data, "stenosis", &tiny(), &quick()).unwrap();
        assert_eq!(a.history, b.history);
        assert!(a.params == b.params);
    }

    #[test]
    fn best_checkpoint_is_returned() {
        let data = separable(120, 2);
        let out = train_single_task(&data, "nerve", &tiny(), &quick()).unwrap();
        let best = out.history.iter().map(EpochRecord::mean_val_macro_f1).fold(f64::MIN, f64::max);
        assert_eq!(out.history[out.best_epoch - 1].mean_val_macro_f1(), best);
        let val = data.subset(&out.split.val).only("nerve").unwrap();
        let rescored = evaluate_sequence(&out.params, &val).unwrap()[0];
        assert!((rescored - best).abs() < 1e-12);
    }

    #[test]
    fn multi_task_shapes_and_determinism() {
        let data = separable(100, 4);
        let cfg = TrainConfig { epochs: 2, ..quick() };
        let a = train_multi_task(&data, &tiny(), &cfg).unwrap();
        assert_eq!(a.params.config().schema.widths(), vec![3, 3, 2]);
        assert_eq!(a.history[0].val_macro_f1.len(), 3);
        let b = train_multi_task(&data, &tiny(), &cfg).unwrap();
        assert!(a.params == b.params);
        let single: usize = ["stenosis", "disc", "nerve"]
            .iter()
            .map(|t| parameter_count(&tiny().with_schema(MultiTaskSchema::lumbar().only(t).unwrap())))
            .sum();
        assert!(parameter_count(a.params.config()) < single);
    }

    #[test]
    fn empty_dataset_rejected() {
        let data = SequenceDataset::new(MultiTaskSchema::lumbar(), vec![]).unwrap();
        assert!(train_single_task(&data, "disc", &tiny(), &quick()).is_err());
        assert!(train_multi_task(&data, &tiny(), &quick()).is_err());
    }

    #[test]
    fn summed_loss_gradient_is_sum_of_task_gradients() {
        let data = separable(12, 5);
        let cfg = tiny().with_schema(MultiTaskSchema::lumbar());
        let params = init_model(&cfg, &Rng::new(7)).unwrap();
        let obj = SequenceObjective { data: &data };
        let idx: Vec<usize> = (0..12).collect();
        let fwd = params.forward(&obj.batch(&idx), Mode::Eval, false).unwrap();
        let (_, full) = obj.loss(&idx, &fwd.logits).unwrap();
        let total = params.backward_flat(&fwd.cache, &full).unwrap();
        let mut summed = vec![0.0; total.len()];
        for t in 0..3 {
            let mut blocks = full.zeros_like();
            if let (Logits::Sequence(b), Logits::Sequence(f)) = (&mut blocks, &full) {
                b[t] = f[t].clone();
            }
            let g = params.backward_flat(&fwd.cache, &blocks).unwrap();
            summed.iter_mut().zip(g).for_each(|(s, v)| *s += v);
        }
        let err = total.iter().zip(&summed).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-10, "{err:e}");
    }

    #[test]
    fn token_classifier_learns_marker() {
        let mut rng = Rng::new(9);
        let data: Vec<TokenExample> = (0..150)
            .map(|_| {
                let tokens: Vec<u32> =
                    std::iter::once(0).chain((0..6).map(|_| 4 + rng.below(12) as u32)).collect();
                let tags = tokens.iter().enumerate().map(|(i, &t)| usize::from(i > 0 && t < 7)).collect();
                TokenExample { tokens, tags }
            })
            .collect();
        let cfg = TrainConfig { epochs: 6, lr_peak: 1e-2, ..TrainConfig::tagger() };
        let out = train_token_classifier(&data, &tiny(), &cfg).unwrap();
        let scores = evaluate_tokens(&out.params, &data).unwrap();
        assert!(scores.location_f1 > 0.9, "{scores:?}");
    }

    #[test]
    fn history_round_trips_as_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        let rec = EpochRecord {
            epoch: 1,
            train_loss: 0.5,
            val_macro_f1: BTreeMap::from([("disc".into(), 0.25)]),
            lr: 1e-3,
        };
        let path = dir.path().join("h.jsonl");
        write_history_jsonl(&path, &[rec.clone(), rec.clone()]).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let lines: Vec<EpochRecord> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines, vec![rec.clone(), rec]);
    }
}
