//! CKA, APAG and macro-F1 against independent reference computations.

mod common;

use common::oracles::{
    brute_apag, confusion_macro_f1, exact_macro_f1, gram_cka, random_matrix, random_orthogonal,
    random_snapshot_pair,
};
use segalign::analysis::{apag, compare_gradients, layer_alignment_proportions, linear_cka, linear_cka_with, macro_f1, CkaVariant};
use segalign::model::GradientSet;
use segalign::numerics::{Matrix, Rng};

#[test]
fn cka_matches_gram_route() {
    let mut rng = Rng::new(21);
    for _ in 0..50 {
        let n = 5 + rng.below(20);
        let x = random_matrix(n, 1 + rng.below(8), &mut rng);
        let y = random_matrix(n, 1 + rng.below(8), &mut rng);
        let got = linear_cka(&x, &y).unwrap();
        let want = gram_cka(&x, &y);
        assert!((got - want).abs() <= 1e-10, "{got} vs {want}");
    }
}

#[test]
fn cka_invariances() {
    let mut rng = Rng::new(22);
    for _ in 0..30 {
        let x = random_matrix(30, 6, &mut rng);
        let y = random_matrix(30, 4, &mut rng);
        let base = linear_cka(&x, &y).unwrap();
        assert!((linear_cka(&x, &x).unwrap() - 1.0).abs() <= 1e-9);
        assert!((linear_cka(&y, &x).unwrap() - base).abs() <= 1e-12);
        let q = random_orthogonal(6, &mut rng);
        let rotated = segalign::numerics::matmul(&x, &q).unwrap();
        assert!((linear_cka(&rotated, &y).unwrap() - base).abs() <= 1e-9);
        for c in [-3.5, 1e-3, 250.0] {
            assert!((linear_cka(&x.scale(c).unwrap(), &y).unwrap() - base).abs() <= 1e-9);
        }
    }
}

#[test]
fn cka_zero_when_centered_columns_are_orthogonal() {
    // centered columns (1,-1,1,-1) and (1,1,-1,-1) have zero inner product
    let x = Matrix::from_rows(&[vec![1.0], vec![-1.0], vec![1.0], vec![-1.0]]).unwrap();
    let y = Matrix::from_rows(&[vec![1.0], vec![1.0], vec![-1.0], vec![-1.0]]).unwrap();
    assert!(linear_cka(&x, &y).unwrap().abs() <= 1e-12);
    assert!(linear_cka_with(&x, &y, CkaVariant::Unsquared).unwrap().abs() <= 1e-12);
}

#[test]
fn unsquared_self_similarity_is_not_one() {
    let x = random_matrix(10, 3, &mut Rng::new(5));
    let v = linear_cka_with(&x, &x, CkaVariant::Unsquared).unwrap();
    assert!((v - 1.0).abs() > 1e-6, "{v}");
}

#[test]
fn apag_matches_brute_force() {
    let mut rng = Rng::new(31);
    for _ in 0..200 {
        let (a, b) = random_snapshot_pair(&mut rng);
        let (want, want_layers) = brute_apag(&a, &b);
        assert_eq!(apag(&a, &b).unwrap(), want);
        assert_eq!(layer_alignment_proportions(&a, &b).unwrap(), want_layers);
        assert_eq!(apag(&b, &a).unwrap(), want);
    }
}

#[test]
fn apag_self_negated_and_rescaled() {
    let mut rng = Rng::new(32);
    for _ in 0..50 {
        let (a, b) = random_snapshot_pair(&mut rng);
        // zeroed groups are never aligned, so self-comparison uses a fresh draw
        let dense = GradientSet {
            entries: a.entries.iter().map(|(k, v)| (*k, v.iter().map(|_| rng.normal()).collect())).collect(),
        };
        assert_eq!(apag(&dense, &dense).unwrap(), 1.0);
        let mut neg = dense.clone();
        neg.scale(-1.0);
        assert_eq!(apag(&dense, &neg).unwrap(), 0.0);

        let mut scaled = b.clone();
        for (_, v) in scaled.entries.iter_mut() {
            let s = 0.01 + 100.0 * rng.uniform();
            v.iter_mut().for_each(|x| *x *= s);
        }
        let flags = |r: &segalign::analysis::AlignmentReport| r.groups.iter().map(|g| g.aligned).collect::<Vec<_>>();
        let before = compare_gradients(&a, &b).unwrap();
        let after = compare_gradients(&a, &scaled).unwrap();
        assert_eq!(flags(&before), flags(&after));
        assert_eq!(before.apag, after.apag);
    }
}

#[test]
fn macro_f1_hand_counts() {
    assert_eq!(macro_f1(&[0, 1, 1, 1], &[0, 0, 1, 1], 2).unwrap(), (2.0 / 3.0 + 4.0 / 5.0) / 2.0);
    assert!((macro_f1(&[0, 1, 1, 1], &[0, 0, 1, 1], 2).unwrap() - 0.733_333_333_333_333_3).abs() < 1e-15);
    assert!((macro_f1(&[0, 0, 0, 0], &[0, 0, 1, 1], 2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(exact_macro_f1(&[0, 1, 1, 1], &[0, 0, 1, 1], 2), (11, 15));
    assert_eq!(exact_macro_f1(&[0, 0, 0, 0], &[0, 0, 1, 1], 2), (1, 3));
}

#[test]
fn macro_f1_matches_confusion_matrix() {
    let mut rng = Rng::new(41);
    for _ in 0..1000 {
        let k = 2 + rng.below(4);
        let n = 1 + rng.below(40);
        let gold: Vec<usize> = (0..n).map(|_| rng.below(k)).collect();
        let pred: Vec<usize> = gold.iter().map(|&g| if rng.bernoulli(0.6) { g } else { rng.below(k) }).collect();
        let got = macro_f1(&pred, &gold, k).unwrap();
        assert_eq!(got, confusion_macro_f1(&pred, &gold, k));
        let (num, den) = exact_macro_f1(&pred, &gold, k);
        assert!((got - num as f64 / den as f64).abs() <= 1e-15);
    }
}

#[test]
fn macro_f1_rejects_empty_and_out_of_range() {
    assert!(macro_f1(&[], &[], 2).is_err());
    assert!(macro_f1(&[2], &[0], 2).is_err());
    assert!(macro_f1(&[0, 1], &[0], 2).is_err());
}
