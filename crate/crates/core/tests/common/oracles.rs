//! Independent reference computations for the analysis routines.

use segalign::model::{param_groups, GradientSet, ModelConfig, MultiTaskSchema};
use segalign::numerics::{Matrix, Rng};

pub fn random_matrix(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.normal()).collect()).unwrap()
}

/// Random orthogonal matrix by Gram-Schmidt on Gaussian columns.
pub fn random_orthogonal(n: usize, rng: &mut Rng) -> Matrix {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        for _ in 0..2 {
            for c in &cols {
                let d: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(a, b)| *a -= d * b);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            cols.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    let mut data = vec![0.0; n * n];
    for (j, c) in cols.iter().enumerate() {
        for (i, v) in c.iter().enumerate() {
            data[i * n + j] = *v;
        }
    }
    Matrix::from_vec(n, n, data).unwrap()
}

/// Naive triple-loop product.
pub fn naive_matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let (n, k, m) = (a.rows(), a.cols(), b.cols());
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            for t in 0..k {
                out[i * m + j] += a.get(i, t) * b.get(t, j);
            }
        }
    }
    Matrix::from_vec(n, m, out).unwrap()
}

/// APAG and per-layer proportions by flattening both snapshots and walking
/// group boundaries index by index.
pub fn brute_apag(a: &GradientSet, b: &GradientSet) -> (f64, Vec<Option<f64>>) {
    let flat_a: Vec<f64> = a.entries.iter().flat_map(|(_, v)| v.iter().copied()).collect();
    let flat_b: Vec<f64> = b.entries.iter().flat_map(|(_, v)| v.iter().copied()).collect();
    let n_layers = a.entries.iter().map(|(k, _)| k.layer).max().unwrap() + 1;
    let mut per_layer = vec![(0usize, 0usize); n_layers];
    let (mut aligned, mut total) = (0usize, 0usize);
    let (mut off_a, mut off_b) = (0usize, 0usize);
    for ((key, va), (_, vb)) in a.entries.iter().zip(&b.entries) {
        let (la, lb) = (va.len(), vb.len());
        if la == lb {
            let mut dot = 0.0;
            for i in 0..la {
                dot += flat_a[off_a + i] * flat_b[off_b + i];
            }
            let flag = usize::from(dot > 0.0);
            aligned += flag;
            total += 1;
            per_layer[key.layer].0 += flag;
            per_layer[key.layer].1 += 1;
        }
        off_a += la;
        off_b += lb;
    }
    let layers = per_layer.iter().map(|&(k, n)| (n > 0).then(|| k as f64 / n as f64)).collect();
    (aligned as f64 / total as f64, layers)
}

/// A pair of snapshots over the groups of a small random model. Half the
/// time the second model's single head has a different class count, so its
/// classifier group is not comparable.
pub fn random_snapshot_pair(rng: &mut Rng) -> (GradientSet, GradientSet) {
    let n_heads = [1, 2, 4][rng.below(3)];
    let cfg = ModelConfig {
        vocab_size: 6,
        max_seq_len: 4,
        d_model: 4,
        n_layers: 1 + rng.below(3),
        n_heads,
        d_ff: 4,
        schema: MultiTaskSchema::new(&[("a", 3)]),
        ..Default::default()
    };
    let other = if rng.bernoulli(0.5) {
        ModelConfig { schema: MultiTaskSchema::new(&[("b", 2)]), ..cfg.clone() }
    } else {
        cfg.clone()
    };
    let draw = |cfg: &ModelConfig, rng: &mut Rng| {
        let groups = param_groups(cfg);
        let n: usize = groups.iter().map(|g| g.len()).sum();
        let flat: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let mut set = GradientSet::from_flat(&groups, &flat);
        // some groups exactly zero, so their dot is 0 and counts as unaligned
        for (_, v) in set.entries.iter_mut() {
            if rng.bernoulli(0.1) {
                v.iter_mut().for_each(|x| *x = 0.0);
            }
        }
        set
    };
    let a = draw(&cfg, rng);
    let mut b = draw(&other, rng);
    // correlate some groups with `a` so both flags occur often
    for ((_, va), (_, vb)) in a.entries.iter().zip(b.entries.iter_mut()) {
        if va.len() == vb.len() && rng.bernoulli(0.5) {
            let s = if rng.bernoulli(0.5) { 1.0 } else { -1.0 };
            vb.iter_mut().zip(va).for_each(|(y, x)| *y = s * x + 0.1 * *y);
        }
    }
    (a, b)
}

/// Macro-F1 from a full confusion matrix: per-class F1 is
/// `2·C[k][k] / (row_k + col_k)`, with 0 when that denominator is 0.
pub fn confusion_macro_f1(pred: &[usize], gold: &[usize], n: usize) -> f64 {
    let mut c = vec![vec![0u64; n]; n];
    for (&p, &g) in pred.iter().zip(gold) {
        c[g][p] += 1;
    }
    let mut sum = 0.0;
    for k in 0..n {
        let row: u64 = c[k].iter().sum();
        let col: u64 = (0..n).map(|g| c[g][k]).sum();
        if row + col > 0 {
            sum += (2 * c[k][k]) as f64 / (row + col) as f64;
        }
    }
    sum / n as f64
}

/// The same mean as an exact fraction, for a rounding-independent check.
pub fn exact_macro_f1(pred: &[usize], gold: &[usize], n: usize) -> (u128, u128) {
    fn gcd(a: u128, b: u128) -> u128 {
        if b == 0 { a } else { gcd(b, a % b) }
    }
    let (mut num, mut den) = (0u128, 1u128);
    for k in 0..n {
        let tp = pred.iter().zip(gold).filter(|(p, g)| **p == k && **g == k).count() as u128;
        let fp = pred.iter().zip(gold).filter(|(p, g)| **p == k && **g != k).count() as u128;
        let fn_ = pred.iter().zip(gold).filter(|(p, g)| **p != k && **g == k).count() as u128;
        let d = 2 * tp + fp + fn_;
        if d == 0 {
            continue;
        }
        num = num * d + 2 * tp * den;
        den *= d;
        let g = gcd(num, den);
        num /= g;
        den /= g;
    }
    den *= n as u128;
    let g = gcd(num, den).max(1);
    (num / g, den / g)
}

/// Linear CKA through centered n×n Gram matrices, `⟨K̃,L̃⟩ / (‖K̃‖‖L̃‖)`.
/// Never forms the feature-space cross products.
pub fn gram_cka(x: &Matrix, y: &Matrix) -> f64 {
    let centered_gram = |m: &Matrix| {
        let k = naive_matmul(m, &m.transpose());
        let n = k.rows();
        let row_mean: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k.get(i, j)).sum::<f64>() / n as f64).collect();
        let all = row_mean.iter().sum::<f64>() / n as f64;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = k.get(i, j) - row_mean[i] - row_mean[j] + all;
            }
        }
        out
    };
    let (k, l) = (centered_gram(x), centered_gram(y));
    let inner = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    inner(&k, &l) / (inner(&k, &k).sqrt() * inner(&l, &l).sqrt())
}
