use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::CkaVariant;
use crate::corpus::GeneratorConfig;
use crate::error::{Error, Result};
use crate::model::{HeadMode, ModelConfig, MultiTaskSchema};
use crate::train::TrainConfig;

/// Encoder shape shared by every model of a run. Vocabulary size and task
/// schema come from the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub dropout_p: f64,
    /// Token ids per example, `[CLS]` included.
    pub max_seq_len: usize,
    /// Words seen fewer times in the training reports map to `[UNK]`.
    pub min_token_count: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection { d_model: 32, n_layers: 2, n_heads: 2, d_ff: 64, dropout_p: 0.5, max_seq_len: 48, min_token_count: 2 }
    }
}

impl ModelSection {
    pub fn model_config(&self, vocab_size: usize, schema: MultiTaskSchema, head_mode: HeadMode) -> ModelConfig {
        ModelConfig {
            vocab_size,
            max_seq_len: self.max_seq_len,
            d_model: self.d_model,
            n_layers: self.n_layers,
            n_heads: self.n_heads,
            d_ff: self.d_ff,
            dropout_p: self.dropout_p,
            head_mode,
            schema,
            ..ModelConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub single_task: TrainConfig,
    pub multi_task: TrainConfig,
    pub tagger: TrainConfig,
    pub trials: usize,
    /// Share of reports held out as the test split.
    pub test_fraction: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let single_task = TrainConfig { epochs: 3, lr_peak: 1e-3, ..TrainConfig::single_task() };
        TrainSection {
            multi_task: TrainConfig { epochs: 6, lr_peak: 1.5e-3, ..TrainConfig::multi_task() },
            tagger: TrainConfig { epochs: 2, lr_peak: 1e-3, ..TrainConfig::tagger() },
            single_task,
            trials: 5,
            test_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    /// Test examples fed to both models for CKA.
    pub probe_examples: usize,
    pub cka_variant: CkaVariant,
    /// Task correlation of the negative-control corpus in `report`.
    pub control_task_correlation: f64,
    /// Segment batch for the one-pass vs per-task timing.
    pub latency_batch: usize,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            probe_examples: 256,
            cka_variant: CkaVariant::Squared,
            control_task_correlation: 0.0,
            latency_batch: 64,
        }
    }
}

/// Default locations; command-line paths take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub corpus: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub generator: GeneratorConfig,
    pub model: ModelSection,
    pub train: TrainSection,
    pub analysis: AnalysisSection,
    pub paths: PathsSection,
}

impl RunConfig {
    /// Parses and validates a config file. Syntax errors and unknown keys
    /// carry the line and column.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate().map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        let m = &self.model;
        if m.d_model == 0 || m.n_layers == 0 || m.n_heads == 0 || m.d_ff == 0 {
            return Err(Error::Config("model: d_model, n_layers, n_heads and d_ff must be positive".into()));
        }
        if m.d_model % m.n_heads != 0 {
            return Err(Error::Config(format!("model.n_heads: {} does not divide d_model {}", m.n_heads, m.d_model)));
        }
        if !(0.0..1.0).contains(&m.dropout_p) {
            return Err(Error::Config(format!("model.dropout_p: {} outside [0, 1)", m.dropout_p)));
        }
        if m.max_seq_len < 2 {
            return Err(Error::Config("model.max_seq_len: must be at least 2".into()));
        }
        for (name, t) in [
            ("single_task", &self.train.single_task),
            ("multi_task", &self.train.multi_task),
            ("tagger", &self.train.tagger),
        ] {
            t.validate().map_err(|e| Error::Config(format!("train.{name}: {e}")))?;
        }
        if self.train.trials == 0 {
            return Err(Error::Config("train.trials: must be positive".into()));
        }
        if !(self.train.test_fraction > 0.0 && self.train.test_fraction < 1.0) {
            return Err(Error::Config(format!("train.test_fraction: {} outside (0, 1)", self.train.test_fraction)));
        }
        if self.analysis.probe_examples < 2 {
            return Err(Error::Config("analysis.probe_examples: need at least 2".into()));
        }
        if self.analysis.latency_batch == 0 {
            return Err(Error::Config("analysis.latency_batch: must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.analysis.control_task_correlation) {
            return Err(Error::Config("analysis.control_task_correlation: outside [0, 1]".into()));
        }
        Ok(())
    }

    /// Pins every seed of the run to `seed`.
    pub fn with_seed(mut self, seed: u64) -> RunConfig {
        self.generator.seed = seed;
        for t in [&mut self.train.single_task, &mut self.train.multi_task, &mut self.train.tagger] {
            t.seed = seed;
        }
        self
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// SHA-256 of the pretty-printed resolved config.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_json()?.as_bytes())))
    }
}
