//! Flat parameter storage with a named tensor layout.

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use crate::error::Result;
use crate::numerics::{name_hash, Matrix, Rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorRole {
    Weight,
    Bias,
    Gain,
    Embedding,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
    pub role: TensorRole,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Offsets of one encoder layer's tensors. Weights are stored `d_in x d_out`.
#[derive(Debug, Clone, Copy)]
pub struct LayerOffsets {
    pub wq: usize,
    pub bq: usize,
    pub wk: usize,
    pub bk: usize,
    pub wv: usize,
    pub bv: usize,
    pub wo: usize,
    pub bo: usize,
    pub ln1_g: usize,
    pub ln1_b: usize,
    pub w1: usize,
    pub b1: usize,
    pub w2: usize,
    pub b2: usize,
    pub ln2_g: usize,
    pub ln2_b: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct HeadOffsets {
    pub w: usize,
    pub b: usize,
    pub n_classes: usize,
    /// Column offset of this task's block in the concatenated logits.
    pub logit_offset: usize,
}

#[derive(Debug, Clone)]
pub struct Layout {
    pub tok_emb: usize,
    pub pos_emb: usize,
    pub layers: Vec<LayerOffsets>,
    pub heads: Vec<HeadOffsets>,
    pub tensors: Vec<TensorSpec>,
    pub total: usize,
}

struct Builder {
    tensors: Vec<TensorSpec>,
    next: usize,
}

impl Builder {
    fn add(&mut self, name: String, rows: usize, cols: usize, role: TensorRole) -> usize {
        let offset = self.next;
        self.tensors.push(TensorSpec { name, rows, cols, offset, role });
        self.next += rows * cols;
        offset
    }
}

impl Layout {
    pub fn new(cfg: &ModelConfig) -> Layout {
        use TensorRole::*;
        let d = cfg.d_model;
        let mut b = Builder { tensors: Vec::new(), next: 0 };
        let tok_emb = b.add("embeddings.token".into(), cfg.vocab_size, d, Embedding);
        let pos_emb = b.add("embeddings.position".into(), cfg.max_seq_len, d, Embedding);
        let layers = (0..cfg.n_layers)
            .map(|l| {
                let p = |s: &str| format!("layer{}.{s}", l + 1);
                LayerOffsets {
                    wq: b.add(p("attn.wq"), d, d, Weight),
                    bq: b.add(p("attn.bq"), 1, d, Bias),
                    wk: b.add(p("attn.wk"), d, d, Weight),
                    bk: b.add(p("attn.bk"), 1, d, Bias),
                    wv: b.add(p("attn.wv"), d, d, Weight),
                    bv: b.add(p("attn.bv"), 1, d, Bias),
                    wo: b.add(p("attn.wo"), d, d, Weight),
                    bo: b.add(p("attn.bo"), 1, d, Bias),
                    ln1_g: b.add(p("ln1.gain"), 1, d, Gain),
                    ln1_b: b.add(p("ln1.bias"), 1, d, Bias),
                    w1: b.add(p("ffn.w1"), d, cfg.d_ff, Weight),
                    b1: b.add(p("ffn.b1"), 1, cfg.d_ff, Bias),
                    w2: b.add(p("ffn.w2"), cfg.d_ff, d, Weight),
                    b2: b.add(p("ffn.b2"), 1, d, Bias),
                    ln2_g: b.add(p("ln2.gain"), 1, d, Gain),
                    ln2_b: b.add(p("ln2.bias"), 1, d, Bias),
                }
            })
            .collect();
        let mut logit_offset = 0;
        let heads = cfg
            .schema
            .tasks
            .iter()
            .map(|t| {
                let h = HeadOffsets {
                    w: b.add(format!("head.{}.w", t.name), d, t.n_classes, Weight),
                    b: b.add(format!("head.{}.b", t.name), 1, t.n_classes, Bias),
                    n_classes: t.n_classes,
                    logit_offset,
                };
                logit_offset += t.n_classes;
                h
            })
            .collect();
        Layout { tok_emb, pos_emb, layers, heads, total: b.next, tensors: b.tensors }
    }

    pub fn tensor(&self, name: &str) -> Option<&TensorSpec> {
        self.tensors.iter().find(|t| t.name == name)
    }
}

/// Parameter count as a pure function of the configuration.
pub fn parameter_count(cfg: &ModelConfig) -> usize {
    Layout::new(cfg).total
}

#[derive(Debug, Clone)]
pub struct ParameterStore {
    config: ModelConfig,
    layout: Layout,
    values: Vec<f64>,
}

impl PartialEq for ParameterStore {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config && self.values == other.values
    }
}

/// Draws a fresh store. Backbone tensors come from one stream and every task
/// head from a stream keyed by the task name, so models built from the same
/// seed share backbone weights and per-task heads regardless of which other
/// tasks they carry.
pub fn init_model(config: &ModelConfig, rng: &Rng) -> Result<ParameterStore> {
    config.validate()?;
    let layout = Layout::new(config);
    let mut values = vec![0.0; layout.total];
    let mut backbone = rng.derive(Stream::Init, 0);
    let head_names: Vec<String> =
        config.schema.tasks.iter().map(|t| format!("head.{}.", t.name)).collect();
    for spec in &layout.tensors {
        let head = head_names.iter().find(|h| spec.name.starts_with(h.as_str()));
        let mut head_rng = head.map(|h| rng.derive(Stream::Init, name_hash(h)));
        let draw = head_rng.as_mut().unwrap_or(&mut backbone);
        let slot = &mut values[spec.range()];
        match spec.role {
            TensorRole::Weight | TensorRole::Embedding => {
                let scale = if head.is_some() { config.head_init_scale } else { 1.0 };
                let limit = scale * (6.0 / (spec.rows + spec.cols) as f64).sqrt();
                for v in slot.iter_mut() {
                    *v = draw.uniform_range(-limit, limit);
                }
            }
            TensorRole::Gain => slot.fill(1.0),
            TensorRole::Bias => {}
        }
    }
    Ok(ParameterStore { config: config.clone(), layout, values })
}

impl ParameterStore {
    pub fn from_values(config: ModelConfig, values: Vec<f64>) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config);
        if values.len() != layout.total {
            return Err(crate::Error::Shape(format!(
                "expected {} parameters, got {}",
                layout.total,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(crate::Error::NonFinite("parameter values".into()));
        }
        Ok(ParameterStore { config, layout, values })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Copies every backbone tensor (embeddings and encoder layers) from
    /// `donor`, keeping this store's task heads.
    pub fn adopt_backbone(&mut self, donor: &ParameterStore) -> Result<()> {
        if !self.config.same_backbone(&donor.config) {
            return Err(crate::Error::Shape("donor model has a different backbone shape".into()));
        }
        for spec in self.layout.tensors.iter().filter(|t| !t.name.starts_with("head.")) {
            let from = donor.layout.tensor(&spec.name).expect("same backbone layout").range();
            self.values[spec.range()].copy_from_slice(&donor.values[from]);
        }
        Ok(())
    }

    pub fn tensor(&self, name: &str) -> Option<Matrix> {
        let spec = self.layout.tensor(name)?;
        Some(Matrix::from_raw(spec.rows, spec.cols, self.values[spec.range()].to_vec()))
    }

    pub(crate) fn slice(&self, offset: usize, len: usize) -> &[f64] {
        &self.values[offset..offset + len]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MultiTaskSchema;

    fn small() -> ModelConfig {
        ModelConfig { vocab_size: 50, max_seq_len: 16, d_model: 16, n_layers: 2, n_heads: 2, d_ff: 32, ..Default::default() }
    }

    #[test]
    fn layout_is_contiguous() {
        let layout = Layout::new(&small());
        let mut next = 0;
        for t in &layout.tensors {
            assert_eq!(t.offset, next);
            next += t.len();
        }
        assert_eq!(next, layout.total);
    }

    #[test]
    fn init_is_deterministic() {
        let cfg = small();
        let a = init_model(&cfg, &Rng::new(3)).unwrap();
        let b = init_model(&cfg, &Rng::new(3)).unwrap();
        assert_eq!(a, b);
        let c = init_model(&cfg, &Rng::new(4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn biases_zero_gains_one_weights_bounded() {
        let cfg = small();
        let p = init_model(&cfg, &Rng::new(1)).unwrap();
        for spec in &p.layout().tensors {
            let v = &p.values()[spec.range()];
            match spec.role {
                TensorRole::Bias => assert!(v.iter().all(|&x| x == 0.0)),
                TensorRole::Gain => assert!(v.iter().all(|&x| x == 1.0)),
                _ => {
                    let lim = (6.0 / (spec.rows + spec.cols) as f64).sqrt();
                    assert!(v.iter().all(|x| x.abs() <= lim));
                    assert!(v.iter().any(|&x| x != 0.0));
                }
            }
        }
    }

    #[test]
    fn backbone_and_heads_shared_across_schemas() {
        let mtl = small();
        let stl = mtl.with_schema(MultiTaskSchema::lumbar().only("disc").unwrap());
        let a = init_model(&mtl, &Rng::new(9)).unwrap();
        let b = init_model(&stl, &Rng::new(9)).unwrap();
        assert_eq!(a.tensor("layer2.ffn.w1"), b.tensor("layer2.ffn.w1"));
        assert_eq!(a.tensor("head.disc.w"), b.tensor("head.disc.w"));
        assert!(parameter_count(&stl) < parameter_count(&mtl));
    }
}
