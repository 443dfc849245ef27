use std::collections::BTreeMap;
use std::fmt::Debug;

use crate::error::{Error, Result};
use crate::numerics::{Rng, Stream};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    /// Ascending indices.
    pub train: Vec<usize>,
    /// Ascending indices.
    pub val: Vec<usize>,
}

/// Stratified holdout: each stratum contributes `round(fraction * count)`
/// of its members to `val`, chosen by a seeded shuffle.
pub fn stratified_split<K: Ord + Clone + Debug>(keys: &[K], fraction: f64, seed: u64) -> Result<Split> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::Config(format!("split fraction {fraction} outside [0, 1)")));
    }
    let mut strata: BTreeMap<K, Vec<usize>> = BTreeMap::new();
    for (i, k) in keys.iter().enumerate() {
        strata.entry(k.clone()).or_default().push(i);
    }
    if let Some((k, _)) = strata.iter().find(|(_, v)| v.len() < 2) {
        return Err(Error::Input(format!(
            "class {k:?} has a single example; stratified splitting needs at least two per class"
        )));
    }
    let rng = Rng::new(seed).derive(Stream::Split, 0);
    let mut val = Vec::new();
    for (s, members) in strata.values().enumerate() {
        let mut members = members.clone();
        let mut r = rng.derive(Stream::Split, s as u64 + 1);
        r.shuffle(&mut members);
        let take = (fraction * members.len() as f64).round() as usize;
        val.extend_from_slice(&members[..take]);
    }
    val.sort_unstable();
    let mut in_val = vec![false; keys.len()];
    val.iter().for_each(|&i| in_val[i] = true);
    let train = (0..keys.len()).filter(|&i| !in_val[i]).collect();
    Ok(Split { train, val })
}
