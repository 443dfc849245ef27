use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadMode {
    /// Per-token logits (the report segmenter).
    TokenClassifier,
    /// One logit block per task from the pooled classification token.
    SequenceClassifier,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    pub n_classes: usize,
}

/// Ordered task list; the stacked classifier emits the blocks in this order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiTaskSchema {
    pub tasks: Vec<TaskSpec>,
}

impl MultiTaskSchema {
    pub fn new(tasks: &[(&str, usize)]) -> Self {
        MultiTaskSchema {
            tasks: tasks
                .iter()
                .map(|&(name, n_classes)| TaskSpec { name: name.to_string(), n_classes })
                .collect(),
        }
    }

    /// stenosis, disc, cord, foraminal: output widths `[3, 3, 2, 2]`.
    pub fn cervical() -> Self {
        MultiTaskSchema::new(&[("stenosis", 3), ("disc", 3), ("cord", 2), ("foraminal", 2)])
    }

    /// stenosis, disc, nerve: output widths `[3, 3, 2]`.
    pub fn lumbar() -> Self {
        MultiTaskSchema::new(&[("stenosis", 3), ("disc", 3), ("nerve", 2)])
    }

    /// Binary Location/Other tagging schema used in token mode.
    pub fn location_tagger() -> Self {
        MultiTaskSchema::new(&[("location", 2)])
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn widths(&self) -> Vec<usize> {
        self.tasks.iter().map(|t| t.n_classes).collect()
    }

    pub fn total_width(&self) -> usize {
        self.tasks.iter().map(|t| t.n_classes).sum()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.tasks.iter().position(|t| t.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.tasks.iter().map(|t| t.name.as_str()).collect()
    }

    /// Single-task sub-schema.
    pub fn only(&self, name: &str) -> Result<MultiTaskSchema> {
        let t = self.index_of(name).ok_or_else(|| {
            Error::Config(format!("unknown task {name:?}; valid tasks: {}", self.names().join(", ")))
        })?;
        Ok(MultiTaskSchema { tasks: vec![self.tasks[t].clone()] })
    }

    pub fn validate(&self) -> Result<()> {
        if self.tasks.is_empty() {
            return Err(Error::Config("schema has no tasks".into()));
        }
        for t in &self.tasks {
            if t.n_classes < 2 {
                return Err(Error::Config(format!("task {} has {} classes", t.name, t.n_classes)));
            }
        }
        for (i, t) in self.tasks.iter().enumerate() {
            if self.tasks[..i].iter().any(|u| u.name == t.name) {
                return Err(Error::Config(format!("duplicate task {}", t.name)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub max_seq_len: usize,
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    /// Dropout applied to the final hidden vectors before the classifier heads.
    pub dropout_p: f64,
    pub head_mode: HeadMode,
    pub schema: MultiTaskSchema,
    pub layer_norm_eps: f64,
    /// Multiplier on the uniform init range of classifier-head weights.
    pub head_init_scale: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            vocab_size: 4096,
            max_seq_len: 128,
            d_model: 64,
            n_layers: 4,
            n_heads: 4,
            d_ff: 128,
            dropout_p: 0.5,
            head_mode: HeadMode::SequenceClassifier,
            schema: MultiTaskSchema::lumbar(),
            layer_norm_eps: 1e-5,
            head_init_scale: 1.0,
        }
    }
}

impl ModelConfig {
    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.vocab_size < 5 {
            return fail(format!("vocab_size {} too small", self.vocab_size));
        }
        if self.max_seq_len < 2 {
            return fail(format!("max_seq_len {} < 2", self.max_seq_len));
        }
        if self.d_model == 0 || self.n_heads == 0 || self.n_layers == 0 || self.d_ff == 0 {
            return fail("d_model, n_heads, n_layers and d_ff must be positive".into());
        }
        if self.d_model % self.n_heads != 0 {
            return fail(format!(
                "d_model {} is not divisible by n_heads {}",
                self.d_model, self.n_heads
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return fail(format!("dropout_p {} outside [0, 1)", self.dropout_p));
        }
        if !(self.layer_norm_eps > 0.0) {
            return fail("layer_norm_eps must be positive".into());
        }
        if !(self.head_init_scale >= 0.0 && self.head_init_scale.is_finite()) {
            return fail(format!("head_init_scale {} must be finite and non-negative", self.head_init_scale));
        }
        self.schema.validate()?;
        if self.head_mode == HeadMode::TokenClassifier && self.schema.len() != 1 {
            return fail("token classifier takes exactly one task".into());
        }
        Ok(())
    }

    /// Same backbone, different schema.
    pub fn with_schema(&self, schema: MultiTaskSchema) -> ModelConfig {
        ModelConfig { schema, ..self.clone() }
    }

    /// True when two configs share every backbone dimension (heads may differ).
    pub fn same_backbone(&self, other: &ModelConfig) -> bool {
        self.vocab_size == other.vocab_size
            && self.max_seq_len == other.max_seq_len
            && self.d_model == other.d_model
            && self.n_layers == other.n_layers
            && self.n_heads == other.n_heads
            && self.d_ff == other.d_ff
    }
}
