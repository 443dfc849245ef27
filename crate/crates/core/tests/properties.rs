mod common;

use common::oracles::{brute_apag, confusion_macro_f1, naive_matmul, random_matrix, random_snapshot_pair};
use proptest::prelude::*;
use segalign::analysis::{apag, grad_cosine, linear_cka, macro_f1};
use segalign::numerics::{frobenius_norm, matmul, row_softmax, Matrix, Rng};
use segalign::pipeline::{normalize_segment_mention, split_sentences};
use segalign::train::{clip_flat, lr_at};

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-10.0f64..10.0, rows * cols).prop_map(move |d| Matrix::from_vec(rows, cols, d).unwrap())
}

fn rel_err(a: &Matrix, b: &Matrix) -> f64 {
    let diff: Vec<f64> = a.data().iter().zip(b.data()).map(|(x, y)| x - y).collect();
    let d = Matrix::from_vec(a.rows(), a.cols(), diff).unwrap();
    frobenius_norm(&d) / frobenius_norm(a).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn matmul_is_associative((a, b, c) in (1usize..6, 1usize..6, 1usize..6, 1usize..6)
        .prop_flat_map(|(n, k, m, p)| (matrix(n, k), matrix(k, m), matrix(m, p)))) {
        let left = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
        let right = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
        if frobenius_norm(&left) > 1e-9 {
            prop_assert!(rel_err(&left, &right) <= 1e-9);
        }
    }

    #[test]
    fn matmul_agrees_with_triple_loop((a, b) in (1usize..7, 1usize..7, 1usize..7)
        .prop_flat_map(|(n, k, m)| (matrix(n, k), matrix(k, m)))) {
        let fast = matmul(&a, &b).unwrap();
        let slow = naive_matmul(&a, &b);
        for (x, y) in fast.data().iter().zip(slow.data()) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn frobenius_scales(q in matrix(3, 4), c in -1e3f64..1e3) {
        let lhs = frobenius_norm(&q.scale(c).unwrap());
        let rhs = c.abs() * frobenius_norm(&q);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
    }

    #[test]
    fn softmax_rows_are_distributions(rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 4), 1..5)) {
        let s = row_softmax(&Matrix::from_rows(&rows).unwrap());
        for r in 0..s.rows() {
            let row = s.row(r);
            prop_assert!(row.iter().all(|p| (0.0..=1.0).contains(p)));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn rng_streams_repeat(seed in any::<u64>()) {
        let (mut a, mut b) = (Rng::new(seed), Rng::new(seed));
        for _ in 0..16 {
            prop_assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn cka_is_symmetric_and_bounded(seed in any::<u64>(), n in 4usize..24) {
        let mut rng = Rng::new(seed);
        let x = random_matrix(n, 3, &mut rng);
        let y = random_matrix(n, 5, &mut rng);
        let xy = linear_cka(&x, &y).unwrap();
        prop_assert!((xy - linear_cka(&y, &x).unwrap()).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&xy));
    }

    #[test]
    fn apag_equals_oracle(seed in any::<u64>()) {
        let (a, b) = random_snapshot_pair(&mut Rng::new(seed));
        prop_assert_eq!(apag(&a, &b).unwrap(), brute_apag(&a, &b).0);
        prop_assert_eq!(apag(&a, &b).unwrap(), apag(&b, &a).unwrap());
        let (_, layers) = grad_cosine(&a, &b).unwrap();
        prop_assert!(layers.iter().flatten().all(|c| (-1.0..=1.0).contains(c)));
    }

    #[test]
    fn macro_f1_equals_oracle_and_ignores_relabeling(
        pairs in prop::collection::vec((0usize..4, 0usize..4), 1..60),
        perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle(),
    ) {
        let (pred, gold): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let f = macro_f1(&pred, &gold, 4).unwrap();
        prop_assert_eq!(f, confusion_macro_f1(&pred, &gold, 4));
        let p2: Vec<usize> = pred.iter().map(|&c| perm[c]).collect();
        let g2: Vec<usize> = gold.iter().map(|&c| perm[c]).collect();
        prop_assert!((macro_f1(&p2, &g2, 4).unwrap() - f).abs() <= 1e-15);
    }

    #[test]
    fn lr_never_increases(total in 1usize..500, peak in 1e-6f64..1.0) {
        for step in 0..total {
            prop_assert!(lr_at(step + 1, total, peak) <= lr_at(step, total, peak));
        }
        prop_assert!((lr_at(0, total, peak) - peak).abs() <= 1e-15 * peak);
        prop_assert_eq!(lr_at(total, total, peak), 0.0);
    }

    #[test]
    fn clipping_bounds_the_norm(mut g in prop::collection::vec(-1e3f64..1e3, 1..50), max in 1e-3f64..100.0) {
        let before = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        let reported = clip_flat(&mut g, max);
        let after = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert_eq!(reported, before);
        prop_assert!(after <= max * (1.0 + 1e-12) || after == before);
        prop_assert!(after <= before * (1.0 + 1e-12));
    }

    #[test]
    fn normalization_never_panics(s in "\\PC{0,12}") {
        let _ = normalize_segment_mention(&s);
    }

    #[test]
    fn sentence_extents_tile_the_text(s in "[a-zA-Z0-9 .!?\n\r-]{0,80}") {
        let sentences = split_sentences(&s);
        if sentences.is_empty() {
            prop_assert!(s.trim().is_empty());
            return Ok(());
        }
        let rebuilt: String = sentences.iter().map(|x| &s[x.extent_start..x.extent_end]).collect();
        prop_assert_eq!(rebuilt, s.clone());
        for x in &sentences {
            prop_assert!(x.extent_start <= x.start && x.start < x.end && x.end <= x.extent_end);
            prop_assert_eq!(x.text(&s).trim(), x.text(&s));
        }
    }
}
