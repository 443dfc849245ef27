use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GradientSet, ParamGroupKey};

/// Inner product with 64-bit accumulation.
pub fn grad_dot(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("gradient lengths {} and {}", a.len(), b.len())));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).sum())
}

/// Heaviside step with `θ(0) = 0`.
pub fn alignment_flag(dot: f64) -> u8 {
    u8::from(dot > 0.0)
}

fn cosine(a: &[f64], b: &[f64], dot: f64) -> f64 {
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupComparison {
    pub key: ParamGroupKey,
    pub dot: f64,
    pub cosine: f64,
    pub aligned: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub groups: Vec<GroupComparison>,
    /// Groups left out because the two models shape them differently
    /// (classifier heads with different class counts).
    pub excluded: Vec<ParamGroupKey>,
    /// Indexed by layer (0 = embedding, last = classifier); `None` when a
    /// layer has no comparable group.
    pub layer_proportions: Vec<Option<f64>>,
    pub layer_cosines: Vec<Option<f64>>,
    pub apag: f64,
    pub cosine: f64,
}

/// Compares two gradient sets group by group. Key lists must match exactly;
/// groups whose lengths differ are excluded and listed in the report.
pub fn compare_gradients(a: &GradientSet, b: &GradientSet) -> Result<AlignmentReport> {
    if a.keys() != b.keys() {
        return Err(Error::Input("gradient snapshots have different parameter groups".into()));
    }
    let n_layers = a.entries.iter().map(|(k, _)| k.layer + 1).max().unwrap_or(0);
    let mut groups = Vec::new();
    let mut excluded = Vec::new();
    for ((key, va), (_, vb)) in a.entries.iter().zip(&b.entries) {
        if va.len() != vb.len() {
            excluded.push(*key);
            continue;
        }
        let dot = grad_dot(va, vb)?;
        groups.push(GroupComparison { key: *key, dot, cosine: cosine(va, vb, dot), aligned: alignment_flag(dot) == 1 });
    }
    if groups.is_empty() {
        return Err(Error::Input("no comparable parameter groups".into()));
    }
    let mut layer_proportions = Vec::with_capacity(n_layers);
    let mut layer_cosines = Vec::with_capacity(n_layers);
    for layer in 0..n_layers {
        let in_layer: Vec<&GroupComparison> = groups.iter().filter(|g| g.key.layer == layer).collect();
        if in_layer.is_empty() {
            layer_proportions.push(None);
            layer_cosines.push(None);
            continue;
        }
        let n = in_layer.len() as f64;
        layer_proportions.push(Some(in_layer.iter().filter(|g| g.aligned).count() as f64 / n));
        layer_cosines.push(Some(in_layer.iter().map(|g| g.cosine).sum::<f64>() / n));
    }
    let apag = groups.iter().filter(|g| g.aligned).count() as f64 / groups.len() as f64;
    let present: Vec<f64> = layer_cosines.iter().flatten().copied().collect();
    let cosine = present.iter().sum::<f64>() / present.len() as f64;
    Ok(AlignmentReport { groups, excluded, layer_proportions, layer_cosines, apag, cosine })
}

/// Aligned groups over comparable groups.
pub fn apag(a: &GradientSet, b: &GradientSet) -> Result<f64> {
    Ok(compare_gradients(a, b)?.apag)
}

/// Proportion of aligned groups per layer, `2 + n_layers` entries.
pub fn layer_alignment_proportions(a: &GradientSet, b: &GradientSet) -> Result<Vec<Option<f64>>> {
    Ok(compare_gradients(a, b)?.layer_proportions)
}

/// Layer-averaged cosine similarity and the per-layer averages.
pub fn grad_cosine(a: &GradientSet, b: &GradientSet) -> Result<(f64, Vec<Option<f64>>)> {
    let r = compare_gradients(a, b)?;
    Ok((r.cosine, r.layer_cosines))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GroupKind;

    fn key(layer: usize, kind: GroupKind) -> ParamGroupKey {
        ParamGroupKey { layer, kind }
    }

    fn set(vs: Vec<(ParamGroupKey, Vec<f64>)>) -> GradientSet {
        GradientSet { entries: vs }
    }

    #[test]
    fn dots_and_flags() {
        assert_eq!(grad_dot(&[1.0, 2.0], &[3.0, -1.0]).unwrap(), 1.0);
        assert!(grad_dot(&[1.0], &[1.0, 2.0]).is_err());
        assert_eq!((alignment_flag(0.3), alignment_flag(-0.3), alignment_flag(0.0)), (1, 0, 0));
    }

    #[test]
    fn five_groups() {
        let keys = [
            key(0, GroupKind::Embedding),
            key(1, GroupKind::Attention(1)),
            key(1, GroupKind::Attention(2)),
            key(1, GroupKind::FeedForward),
            key(2, GroupKind::Classifier),
        ];
        let a = set(keys.iter().map(|k| (*k, vec![1.0])).collect());
        let b = set(keys.iter().zip([1.0, -1.0, 2.0, 0.5, 0.0]).map(|(k, v)| (*k, vec![v])).collect());
        let r = compare_gradients(&a, &b).unwrap();
        assert!((r.apag - 0.6).abs() < 1e-15);
        assert_eq!(r.layer_proportions, vec![Some(1.0), Some(2.0 / 3.0), Some(0.0)]);
    }

    #[test]
    fn mismatched_lengths_are_excluded() {
        let a = set(vec![(key(0, GroupKind::Embedding), vec![1.0]), (key(1, GroupKind::Classifier), vec![1.0; 3])]);
        let b = set(vec![(key(0, GroupKind::Embedding), vec![2.0]), (key(1, GroupKind::Classifier), vec![1.0; 2])]);
        let r = compare_gradients(&a, &b).unwrap();
        assert_eq!(r.excluded, vec![key(1, GroupKind::Classifier)]);
        assert_eq!(r.layer_proportions, vec![Some(1.0), None]);
        assert_eq!(r.apag, 1.0);
        assert_eq!(r.cosine, 1.0);
    }

    #[test]
    fn key_mismatch_rejected() {
        let a = set(vec![(key(0, GroupKind::Embedding), vec![1.0])]);
        let b = set(vec![(key(1, GroupKind::FeedForward), vec![1.0])]);
        assert!(apag(&a, &b).is_err());
    }

    #[test]
    fn cosine_cases() {
        let a = set(vec![(key(0, GroupKind::Embedding), vec![1.0, 0.0]), (key(1, GroupKind::Classifier), vec![0.0, 0.0])]);
        let b = set(vec![(key(0, GroupKind::Embedding), vec![0.0, 3.0]), (key(1, GroupKind::Classifier), vec![1.0, 1.0])]);
        let (c, per) = grad_cosine(&a, &b).unwrap();
        assert_eq!(c, 0.0);
        assert_eq!(per, vec![Some(0.0), Some(0.0)]);
        assert!((grad_cosine(&b, &b).unwrap().0 - 1.0).abs() < 1e-15);
    }
}
