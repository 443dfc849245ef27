//! Partition of the parameter vector into (layer, head) groups.
//!
//! Layer 0 is the embedding (one head), layers `1..=n_layers` are the encoder
//! layers and `n_layers + 1` is the classifier (one head). Attention head `h`
//! owns columns `[h*d_k, (h+1)*d_k)` of Wq/Wk/Wv with the matching bias
//! entries, and the same rows of Wo. The rest of an encoder layer (Wo bias,
//! feed-forward, both layer norms) forms one extra single-head group.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::params::Layout;
use crate::error::{Error, Result};
use crate::numerics::dot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "head")]
pub enum GroupKind {
    Embedding,
    /// 1-based attention head index.
    Attention(usize),
    FeedForward,
    Classifier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParamGroupKey {
    pub layer: usize,
    pub kind: GroupKind,
}

impl ParamGroupKey {
    /// Head index as counted in the alignment sums: the attention head for
    /// attention slices, 1 for every single-head group.
    pub fn head(&self) -> usize {
        match self.kind {
            GroupKind::Attention(h) => h,
            _ => 1,
        }
    }
}

impl fmt::Display for ParamGroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            GroupKind::Embedding => write!(f, "L{}.embedding", self.layer),
            GroupKind::Attention(h) => write!(f, "L{}.head{}", self.layer, h),
            GroupKind::FeedForward => write!(f, "L{}.ffn", self.layer),
            GroupKind::Classifier => write!(f, "L{}.classifier", self.layer),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamGroup {
    pub key: ParamGroupKey,
    /// Slices of the flat parameter vector, in gather order.
    pub ranges: Vec<Range<usize>>,
}

impl ParamGroup {
    pub fn len(&self) -> usize {
        self.ranges.iter().map(|r| r.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn gather(&self, flat: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for r in &self.ranges {
            out.extend_from_slice(&flat[r.clone()]);
        }
        out
    }
}

pub fn param_groups(cfg: &ModelConfig) -> Vec<ParamGroup> {
    let layout = Layout::new(cfg);
    let d = cfg.d_model;
    let dk = cfg.head_dim();
    let mut groups = Vec::with_capacity(2 + cfg.n_layers * (cfg.n_heads + 1));
    let whole = |off: usize, len: usize| off..off + len;
    groups.push(ParamGroup {
        key: ParamGroupKey { layer: 0, kind: GroupKind::Embedding },
        ranges: vec![
            whole(layout.tok_emb, cfg.vocab_size * d),
            whole(layout.pos_emb, cfg.max_seq_len * d),
        ],
    });
    for (l, lo) in layout.layers.iter().enumerate() {
        for h in 0..cfg.n_heads {
            let mut ranges = Vec::new();
            for (w, b) in [(lo.wq, lo.bq), (lo.wk, lo.bk), (lo.wv, lo.bv)] {
                for row in 0..d {
                    ranges.push(whole(w + row * d + h * dk, dk));
                }
                ranges.push(whole(b + h * dk, dk));
            }
            ranges.push(whole(lo.wo + h * dk * d, dk * d));
            groups.push(ParamGroup {
                key: ParamGroupKey { layer: l + 1, kind: GroupKind::Attention(h + 1) },
                ranges,
            });
        }
        groups.push(ParamGroup {
            key: ParamGroupKey { layer: l + 1, kind: GroupKind::FeedForward },
            ranges: vec![
                whole(lo.bo, d),
                whole(lo.ln1_g, d),
                whole(lo.ln1_b, d),
                whole(lo.w1, d * cfg.d_ff),
                whole(lo.b1, cfg.d_ff),
                whole(lo.w2, cfg.d_ff * d),
                whole(lo.b2, d),
                whole(lo.ln2_g, d),
                whole(lo.ln2_b, d),
            ],
        });
    }
    groups.push(ParamGroup {
        key: ParamGroupKey { layer: cfg.n_layers + 1, kind: GroupKind::Classifier },
        ranges: layout
            .heads
            .iter()
            .flat_map(|h| [whole(h.w, d * h.n_classes), whole(h.b, h.n_classes)])
            .collect(),
    });
    groups
}

/// Gradient vectors keyed by parameter group, in `param_groups` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientSet {
    pub entries: Vec<(ParamGroupKey, Vec<f64>)>,
}

impl GradientSet {
    pub fn from_flat(groups: &[ParamGroup], flat: &[f64]) -> GradientSet {
        GradientSet { entries: groups.iter().map(|g| (g.key, g.gather(flat))).collect() }
    }

    pub fn zeros_like(groups: &[ParamGroup]) -> GradientSet {
        GradientSet { entries: groups.iter().map(|g| (g.key, vec![0.0; g.len()])).collect() }
    }

    /// Writes the grouped values back into a flat vector.
    pub fn scatter(&self, groups: &[ParamGroup], flat: &mut [f64]) -> Result<()> {
        if groups.len() != self.entries.len() {
            return Err(Error::Shape("group count mismatch".into()));
        }
        for (g, (key, v)) in groups.iter().zip(&self.entries) {
            if g.key != *key || g.len() != v.len() {
                return Err(Error::Shape(format!("group {key} does not match layout")));
            }
            let mut at = 0;
            for r in &g.ranges {
                flat[r.clone()].copy_from_slice(&v[at..at + r.len()]);
                at += r.len();
            }
        }
        Ok(())
    }

    pub fn get(&self, key: &ParamGroupKey) -> Option<&[f64]> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_slice())
    }

    pub fn keys(&self) -> Vec<ParamGroupKey> {
        self.entries.iter().map(|(k, _)| *k).collect()
    }

    pub fn global_norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| dot(v, v)).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        for (_, v) in &mut self.entries {
            v.iter_mut().for_each(|x| *x *= s);
        }
    }

    pub fn add_assign(&mut self, other: &GradientSet) -> Result<()> {
        if self.keys() != other.keys() {
            return Err(Error::Input("gradient sets have different groups".into()));
        }
        for ((_, a), (_, b)) in self.entries.iter_mut().zip(&other.entries) {
            if a.len() != b.len() {
                return Err(Error::Shape("gradient group lengths differ".into()));
            }
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        Ok(())
    }

    pub fn total_len(&self) -> usize {
        self.entries.iter().map(|(_, v)| v.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parameter_count;

    fn cfg(layers: usize, heads: usize) -> ModelConfig {
        ModelConfig {
            vocab_size: 30,
            max_seq_len: 8,
            d_model: 8 * heads,
            n_layers: layers,
            n_heads: heads,
            d_ff: 16,
            ..Default::default()
        }
    }

    #[test]
    fn group_counts() {
        assert_eq!(param_groups(&cfg(4, 4)).len(), 22);
        assert_eq!(param_groups(&cfg(1, 1)).len(), 4);
    }

    #[test]
    fn groups_partition_parameters() {
        for (l, h) in [(1, 1), (2, 2), (3, 4)] {
            let c = cfg(l, h);
            let groups = param_groups(&c);
            let total = parameter_count(&c);
            let mut seen = vec![0u8; total];
            for g in &groups {
                for r in &g.ranges {
                    for i in r.clone() {
                        seen[i] += 1;
                    }
                }
            }
            assert!(seen.iter().all(|&s| s == 1), "overlap or gap for {l}x{h}");
            assert_eq!(groups.iter().map(ParamGroup::len).sum::<usize>(), total);
        }
    }

    #[test]
    fn scatter_inverts_gather() {
        let c = cfg(2, 2);
        let groups = param_groups(&c);
        let flat: Vec<f64> = (0..parameter_count(&c)).map(|i| i as f64).collect();
        let set = GradientSet::from_flat(&groups, &flat);
        let mut back = vec![0.0; flat.len()];
        set.scatter(&groups, &mut back).unwrap();
        assert_eq!(back, flat);
    }

    #[test]
    fn heads() {
        let groups = param_groups(&cfg(1, 2));
        let heads: Vec<usize> = groups.iter().map(|g| g.key.head()).collect();
        assert_eq!(heads, vec![1, 1, 2, 1, 1]);
        assert_eq!(groups[1].key.to_string(), "L1.head1");
    }
}
