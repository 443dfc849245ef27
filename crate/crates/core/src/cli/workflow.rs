//! Steps shared by the commands: data preparation, one training trial,
//! model comparisons and timing.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::analysis::{compare_gradients, layerwise_cka_with, AlignmentReport, CkaReport, CkaVariant};
use crate::corpus::{build_vocab, classifier_examples, split_reports, tagger_examples, AnnotatedReport, Vocab};
use crate::error::{Error, Result};
use crate::model::{parameter_count, HeadMode, ModelConfig, Mode, MultiTaskSchema, ParameterStore, TokenBatch};
use crate::pipeline::BodyPart;
use crate::train::{
    evaluate_sequence, evaluate_tokens, train_multi_task, train_single_task, train_token_classifier,
    EpochGradientSnapshot, SequenceDataset, TokenExample, TrainOutcome,
};

/// What one training run fits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrainMode {
    Single(String),
    Multi,
    /// The Location/Other segmenter.
    Tagger,
}

impl FromStr for TrainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<TrainMode> {
        match s {
            "multi" => Ok(TrainMode::Multi),
            "tagger" => Ok(TrainMode::Tagger),
            _ => match s.strip_prefix("single:") {
                Some(task) if !task.is_empty() => Ok(TrainMode::Single(task.to_string())),
                _ => Err(Error::Config(format!("mode {s:?}: expected single:<task>, multi or tagger"))),
            },
        }
    }
}

impl fmt::Display for TrainMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainMode::Single(t) => write!(f, "single:{t}"),
            TrainMode::Multi => f.write_str("multi"),
            TrainMode::Tagger => f.write_str("tagger"),
        }
    }
}

/// A corpus split into train and test reports, with the vocabulary and
/// classifier examples derived from the training side.
pub struct Prepared {
    pub body_part: BodyPart,
    pub vocab: Vocab,
    pub train_reports: Vec<AnnotatedReport>,
    pub test_reports: Vec<AnnotatedReport>,
    pub train: SequenceDataset,
    pub test: SequenceDataset,
}

impl Prepared {
    pub fn new(train_reports: Vec<AnnotatedReport>, test_reports: Vec<AnnotatedReport>, cfg: &RunConfig) -> Result<Prepared> {
        let body_part = match train_reports.first() {
            Some(r) => r.body_part,
            None => return Err(Error::Input("no training reports".into())),
        };
        if let Some(r) = train_reports.iter().chain(&test_reports).find(|r| r.body_part != body_part) {
            return Err(Error::Input(format!("report {} is {} but the corpus is {}", r.id, r.body_part.as_str(), body_part.as_str())));
        }
        let texts: Vec<&str> = train_reports.iter().map(|r| r.text.as_str()).collect();
        let vocab = build_vocab(&texts, cfg.model.min_token_count)?;
        let schema = body_part.schema();
        let max_len = cfg.model.max_seq_len;
        let (train, _) = classifier_examples(&train_reports, &vocab, max_len, &schema)?;
        let (test, _) = classifier_examples(&test_reports, &vocab, max_len, &schema)?;
        Ok(Prepared { body_part, vocab, train_reports, test_reports, train, test })
    }

    /// Splits `reports` by report id, stratified as in [`split_reports`].
    pub fn split(reports: &[AnnotatedReport], cfg: &RunConfig) -> Result<Prepared> {
        let (train, test) = split_reports(reports, cfg.train.test_fraction, cfg.generator.seed)?;
        Prepared::new(train, test, cfg)
    }

    pub fn schema(&self) -> MultiTaskSchema {
        self.body_part.schema()
    }

    pub fn model_config(&self, cfg: &RunConfig, mode: &TrainMode) -> Result<ModelConfig> {
        let (schema, head) = match mode {
            TrainMode::Single(task) => (self.schema().only(task)?, HeadMode::SequenceClassifier),
            TrainMode::Multi => (self.schema(), HeadMode::SequenceClassifier),
            TrainMode::Tagger => (MultiTaskSchema::location_tagger(), HeadMode::TokenClassifier),
        };
        Ok(cfg.model.model_config(self.vocab.len(), schema, head))
    }

    pub fn tagger_data(&self, max_len: usize) -> (Vec<TokenExample>, Vec<TokenExample>) {
        (tagger_examples(&self.train_reports, &self.vocab, max_len), tagger_examples(&self.test_reports, &self.vocab, max_len))
    }

    /// The first `n` test examples, as one batch.
    pub fn probe_batch(&self, n: usize) -> Result<TokenBatch> {
        if self.test.len() < 2 {
            return Err(Error::Input("probe set needs at least two test examples".into()));
        }
        let seqs: Vec<&[u32]> = self.test.examples.iter().take(n).map(|e| e.tokens.as_slice()).collect();
        Ok(TokenBatch::from_sequences(&seqs))
    }
}

pub struct TrialResult {
    pub mode: TrainMode,
    pub seed: u64,
    pub outcome: TrainOutcome,
    /// Test macro-F1 per task; the tagger reports Location F1 under
    /// `location`.
    pub test_scores: BTreeMap<String, f64>,
}

/// Trains one model in `mode` with `seed` and scores it on the test split.
pub fn run_trial(prep: &Prepared, cfg: &RunConfig, mode: &TrainMode, seed: u64) -> Result<TrialResult> {
    let model = prep.model_config(cfg, mode)?;
    let (outcome, test_scores) = match mode {
        TrainMode::Single(task) => {
            let tc = crate::train::TrainConfig { seed, ..cfg.train.single_task.clone() };
            let out = train_single_task(&prep.train, task, &model, &tc)?;
            let f1 = evaluate_sequence(&out.params, &prep.test.only(task)?)?;
            (out, BTreeMap::from([(task.clone(), f1[0])]))
        }
        TrainMode::Multi => {
            let tc = crate::train::TrainConfig { seed, ..cfg.train.multi_task.clone() };
            let out = train_multi_task(&prep.train, &model, &tc)?;
            let f1 = evaluate_sequence(&out.params, &prep.test)?;
            let scores = prep.schema().names().into_iter().map(String::from).zip(f1).collect();
            (out, scores)
        }
        TrainMode::Tagger => {
            let tc = crate::train::TrainConfig { seed, ..cfg.train.tagger.clone() };
            let (train, test) = prep.tagger_data(model.max_seq_len);
            let out = train_token_classifier(&train, &model, &tc)?;
            let s = evaluate_tokens(&out.params, &test)?;
            (out, BTreeMap::from([("location".to_string(), s.location_f1), ("macro".to_string(), s.macro_f1)]))
        }
    };
    Ok(TrialResult { mode: mode.clone(), seed, outcome, test_scores })
}

/// Mean and sample standard deviation of one task over trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub task: String,
    pub mean: f64,
    pub sd: f64,
    pub trials: Vec<f64>,
}

pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// One row per task, from per-trial score maps.
pub fn score_table(trials: &[BTreeMap<String, f64>]) -> Vec<ScoreRow> {
    let mut by_task: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for t in trials {
        for (task, &v) in t {
            by_task.entry(task).or_default().push(v);
        }
    }
    by_task
        .into_iter()
        .map(|(task, trials)| {
            let (mean, sd) = mean_sd(&trials);
            ScoreRow { task: task.to_string(), mean, sd, trials }
        })
        .collect()
}

pub fn score_table_csv(rows: &[ScoreRow]) -> String {
    let mut out = String::from("task,mean,sd,trials\n");
    for r in rows {
        let trials: Vec<String> = r.trials.iter().map(|v| format!("{v:.6}")).collect();
        out.push_str(&format!("{},{:.6},{:.6},{}\n", r.task, r.mean, r.sd, trials.join(";")));
    }
    out
}

/// Rejects a pair of models whose encoders cannot be compared layer by
/// layer; the message carries both configs.
pub fn check_same_topology(a: &ModelConfig, b: &ModelConfig) -> Result<()> {
    let same = a.d_model == b.d_model && a.n_layers == b.n_layers && a.n_heads == b.n_heads && a.d_ff == b.d_ff
        && a.vocab_size == b.vocab_size
        && a.max_seq_len == b.max_seq_len;
    if same {
        return Ok(());
    }
    let show = |c: &ModelConfig| serde_json::to_string(c).unwrap_or_else(|_| format!("{c:?}"));
    Err(Error::Config(format!("model topologies differ:\n  a: {}\n  b: {}", show(a), show(b))))
}

/// Layerwise CKA of two models on the same probe batch.
pub fn compare_representations(
    a: &ParameterStore,
    b: &ParameterStore,
    probe: &TokenBatch,
    variant: CkaVariant,
) -> Result<CkaReport> {
    check_same_topology(a.config(), b.config())?;
    let stack = |p: &ParameterStore| {
        p.forward(probe, Mode::Eval, true)?
            .activations
            .ok_or_else(|| Error::Input("forward pass did not capture activations".into()))
    };
    layerwise_cka_with(&stack(a)?, &stack(b)?, variant)
}

/// Alignment of two runs' snapshots, epoch by epoch, over the epochs both
/// runs reached.
pub fn compare_snapshots(a: &[EpochGradientSnapshot], b: &[EpochGradientSnapshot]) -> Result<Vec<(usize, AlignmentReport)>> {
    let mut out = Vec::new();
    for sa in a {
        if let Some(sb) = b.iter().find(|s| s.epoch == sa.epoch) {
            out.push((sa.epoch, compare_gradients(&sa.gradients, &sb.gradients)?));
        }
    }
    if out.is_empty() {
        return Err(Error::Input("the two runs share no epoch".into()));
    }
    Ok(out)
}

/// Wall-clock comparison of one multi-task forward against one forward per
/// single-task model on the same batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyComparison {
    pub batch: usize,
    pub repeats: usize,
    pub multi_task_ms: f64,
    pub single_task_ms: f64,
    pub speedup: f64,
    pub multi_task_params: usize,
    pub single_task_params: usize,
}

/// Medians over `repeats` timed rounds, after one warm-up round.
pub fn compare_latency(
    multi: &ParameterStore,
    singles: &[&ParameterStore],
    batch: &TokenBatch,
    repeats: usize,
) -> Result<LatencyComparison> {
    if singles.is_empty() || repeats == 0 {
        return Err(Error::Input("latency comparison needs single-task models and at least one round".into()));
    }
    for s in singles {
        check_same_topology(multi.config(), s.config())?;
    }
    let time = |models: &[&ParameterStore]| -> Result<f64> {
        let t0 = Instant::now();
        for m in models {
            m.forward(batch, Mode::Eval, false)?;
        }
        Ok(t0.elapsed().as_secs_f64() * 1e3)
    };
    time(&[multi])?;
    time(singles)?;
    let (mut mt, mut st) = (Vec::with_capacity(repeats), Vec::with_capacity(repeats));
    for _ in 0..repeats {
        mt.push(time(&[multi])?);
        st.push(time(singles)?);
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        crate::analysis::quantile(v, 0.5)
    };
    let (multi_task_ms, single_task_ms) = (median(&mut mt), median(&mut st));
    Ok(LatencyComparison {
        batch: batch.rows(),
        repeats,
        multi_task_ms,
        single_task_ms,
        speedup: single_task_ms / multi_task_ms,
        multi_task_params: parameter_count(multi.config()),
        single_task_params: singles.iter().map(|s| parameter_count(s.config())).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_round_trip() {
        for s in ["single:disc", "multi", "tagger"] {
            assert_eq!(s.parse::<TrainMode>().unwrap().to_string(), s);
        }
        assert!("single:".parse::<TrainMode>().is_err());
        assert!("both".parse::<TrainMode>().is_err());
    }

    #[test]
    fn sample_sd() {
        let (m, sd) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(mean_sd(&[0.7]), (0.7, 0.0));
    }

    #[test]
    fn table_groups_tasks() {
        let trials = vec![
            BTreeMap::from([("disc".to_string(), 0.8), ("nerve".to_string(), 0.6)]),
            BTreeMap::from([("disc".to_string(), 0.9), ("nerve".to_string(), 0.6)]),
        ];
        let rows = score_table(&trials);
        assert_eq!(rows.len(), 2);
        assert!((rows[0].mean - 0.85).abs() < 1e-12);
        assert_eq!(rows[1].sd, 0.0);
        assert!(score_table_csv(&rows).starts_with("task,mean,sd,trials\ndisc,0.850000,"));
    }
}
