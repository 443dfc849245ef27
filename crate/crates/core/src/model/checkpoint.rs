//! On-disk formats for model weights and grouped gradients.
//!
//! A checkpoint is a JSON manifest at `path` plus a payload at `path.bin`
//! holding one matrix dump per tensor, in manifest order. A gradient dump is
//! a JSON index at `path` plus a single `1 x total` matrix at `path.bin`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ModelConfig;
use super::groups::{GradientSet, GroupKind, ParamGroupKey};
use super::params::{Layout, ParameterStore};
use crate::error::{Error, Result};
use crate::numerics::dump::{matrix_from_bytes, matrix_to_bytes, HEADER_LEN};
use crate::numerics::Matrix;

const CHECKPOINT_FORMAT: &str = "segalign-checkpoint-v1";
const GRADIENT_FORMAT: &str = "segalign-gradients-v1";

fn payload_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".bin");
    PathBuf::from(p)
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    rows: usize,
    cols: usize,
    byte_offset: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointManifest {
    format: String,
    config: ModelConfig,
    payload: String,
    tensors: Vec<TensorEntry>,
    vocab_hash: String,
    vocab: Vec<String>,
}

/// SHA-256 over the newline-joined vocabulary, hex encoded.
pub fn vocab_hash(tokens: &[String]) -> String {
    let mut h = Sha256::new();
    for t in tokens {
        h.update(t.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

/// A trained model with the vocabulary its token ids refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ParameterStore,
    pub vocab: Vec<String>,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let layout = self.params.layout();
        let mut payload = Vec::new();
        let mut tensors = Vec::with_capacity(layout.tensors.len());
        for spec in &layout.tensors {
            tensors.push(TensorEntry {
                name: spec.name.clone(),
                rows: spec.rows,
                cols: spec.cols,
                byte_offset: payload.len(),
            });
            let m = Matrix::from_raw(spec.rows, spec.cols, self.params.values()[spec.range()].to_vec());
            payload.extend_from_slice(&matrix_to_bytes(&m));
        }
        let bin = payload_path(path);
        let manifest = CheckpointManifest {
            format: CHECKPOINT_FORMAT.into(),
            config: self.params.config().clone(),
            payload: file_name(&bin),
            tensors,
            vocab_hash: vocab_hash(&self.vocab),
            vocab: self.vocab.clone(),
        };
        fs::write(&bin, payload)?;
        fs::write(path, serde_json::to_vec_pretty(&manifest)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let manifest: CheckpointManifest = serde_json::from_slice(&fs::read(path)?)?;
        if manifest.format != CHECKPOINT_FORMAT {
            return Err(Error::Format(format!("{}: not a checkpoint", path.display())));
        }
        if vocab_hash(&manifest.vocab) != manifest.vocab_hash {
            return Err(Error::Format("vocabulary hash mismatch".into()));
        }
        let bin = path.with_file_name(&manifest.payload);
        let payload = fs::read(&bin)?;
        let layout = Layout::new(&manifest.config);
        if layout.tensors.len() != manifest.tensors.len() {
            return Err(Error::Format("tensor count does not match config".into()));
        }
        let mut values = Vec::with_capacity(layout.total);
        for (spec, entry) in layout.tensors.iter().zip(&manifest.tensors) {
            if spec.name != entry.name || spec.rows != entry.rows || spec.cols != entry.cols {
                return Err(Error::Format(format!("tensor {} does not match config", entry.name)));
            }
            let end = entry.byte_offset + HEADER_LEN + spec.len() * 8;
            let bytes = payload
                .get(entry.byte_offset..end)
                .ok_or_else(|| Error::Format(format!("payload truncated at {}", entry.name)))?;
            let m = matrix_from_bytes(bytes)?;
            if m.shape() != (spec.rows, spec.cols) {
                return Err(Error::Format(format!("tensor {} has wrong shape", entry.name)));
            }
            values.extend_from_slice(m.data());
        }
        Ok(Checkpoint {
            params: ParameterStore::from_values(manifest.config, values)?,
            vocab: manifest.vocab,
        })
    }

    pub fn vocab_hash(&self) -> String {
        vocab_hash(&self.vocab)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct GroupEntry {
    layer: usize,
    kind: String,
    head: usize,
    offset: usize,
    length: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct GradientIndex {
    format: String,
    payload: String,
    groups: Vec<GroupEntry>,
}

fn kind_name(k: GroupKind) -> &'static str {
    match k {
        GroupKind::Embedding => "embedding",
        GroupKind::Attention(_) => "attention",
        GroupKind::FeedForward => "ffn",
        GroupKind::Classifier => "classifier",
    }
}

pub fn write_gradient_set(path: &Path, set: &GradientSet) -> Result<()> {
    let mut groups = Vec::with_capacity(set.entries.len());
    let mut flat = Vec::with_capacity(set.total_len());
    for (key, v) in &set.entries {
        groups.push(GroupEntry {
            layer: key.layer,
            kind: kind_name(key.kind).into(),
            head: key.head(),
            offset: flat.len(),
            length: v.len(),
        });
        flat.extend_from_slice(v);
    }
    let bin = payload_path(path);
    let total = flat.len();
    fs::write(&bin, matrix_to_bytes(&Matrix::from_vec(1, total, flat)?))?;
    let index = GradientIndex { format: GRADIENT_FORMAT.into(), payload: file_name(&bin), groups };
    fs::write(path, serde_json::to_vec_pretty(&index)?)?;
    Ok(())
}

pub fn read_gradient_set(path: &Path) -> Result<GradientSet> {
    let index: GradientIndex = serde_json::from_slice(&fs::read(path)?)?;
    if index.format != GRADIENT_FORMAT {
        return Err(Error::Format(format!("{}: not a gradient dump", path.display())));
    }
    let m = matrix_from_bytes(&fs::read(path.with_file_name(&index.payload))?)?;
    let flat = m.data();
    let mut entries = Vec::with_capacity(index.groups.len());
    for g in index.groups {
        let kind = match g.kind.as_str() {
            "embedding" => GroupKind::Embedding,
            "attention" => GroupKind::Attention(g.head),
            "ffn" => GroupKind::FeedForward,
            "classifier" => GroupKind::Classifier,
            other => return Err(Error::Format(format!("unknown group kind {other}"))),
        };
        let v = flat
            .get(g.offset..g.offset + g.length)
            .ok_or_else(|| Error::Format("gradient payload truncated".into()))?;
        entries.push((ParamGroupKey { layer: g.layer, kind }, v.to_vec()));
    }
    Ok(GradientSet { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_model, param_groups};
    use crate::numerics::Rng;

    fn cfg() -> ModelConfig {
        ModelConfig { vocab_size: 12, max_seq_len: 6, d_model: 4, n_layers: 1, n_heads: 2, d_ff: 8, ..Default::default() }
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let vocab: Vec<String> = (0..12).map(|i| format!("t{i}")).collect();
        let ck = Checkpoint { params: init_model(&cfg(), &Rng::new(1)).unwrap(), vocab };
        ck.save(&path).unwrap();
        assert!(dir.path().join("m.ckpt.bin").exists());
        assert_eq!(Checkpoint::load(&path).unwrap(), ck);
    }

    #[test]
    fn gradient_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.json");
        let groups = param_groups(&cfg());
        let flat: Vec<f64> = (0..crate::model::parameter_count(&cfg())).map(|i| i as f64 * 0.5).collect();
        let set = GradientSet::from_flat(&groups, &flat);
        write_gradient_set(&path, &set).unwrap();
        assert_eq!(read_gradient_set(&path).unwrap(), set);
    }
}
