mod common;

use anchorview::{accuracy, nmi, purity, MetricReport, NmiNorm};
use common::brute_force_accuracy;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn accuracy_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..50 {
        let k = rng.random_range(1..=6);
        let n = rng.random_range(1..40);
        let pred: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let fast = accuracy(&pred, &truth).unwrap();
        assert!((fast - brute_force_accuracy(&pred, &truth)).abs() < 1e-12);
    }
}

#[test]
fn documented_examples() {
    let truth = [0, 0, 1, 1, 2, 2];
    let pred = [1, 1, 0, 0, 2, 0];
    assert!((accuracy(&pred, &truth).unwrap() - 5.0 / 6.0).abs() < 1e-12);
    assert!(nmi(&[0, 1, 0, 1], &[0, 0, 1, 1]).unwrap().abs() < 1e-12);
}

#[test]
fn random_labels_carry_little_information() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let pred: Vec<usize> = (0..10_000).map(|_| rng.random_range(0..5)).collect();
    let truth: Vec<usize> = (0..10_000).map(|_| rng.random_range(0..5)).collect();
    assert!(nmi(&pred, &truth).unwrap() < 0.1);
}

#[test]
fn unequal_label_counts() {
    // four predicted clusters against two classes
    let truth = [0, 0, 0, 1, 1, 1];
    let pred = [0, 1, 2, 3, 3, 3];
    assert!((accuracy(&pred, &truth).unwrap() - 4.0 / 6.0).abs() < 1e-12);
    assert!((purity(&pred, &truth).unwrap() - 1.0).abs() < 1e-12);
}

fn labels() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (1usize..60).prop_flat_map(|n| (prop::collection::vec(0usize..5, n), prop::collection::vec(0usize..5, n)))
}

proptest! {
    #[test]
    fn metrics_ignore_label_names((pred, truth) in labels(), shift in 1usize..100) {
        let renamed: Vec<usize> = pred.iter().map(|p| (4 - p) * 7 + shift).collect();
        for norm in [NmiNorm::Geometric, NmiNorm::Arithmetic] {
            let a = MetricReport::compute(&pred, &truth, norm).unwrap();
            let b = MetricReport::compute(&renamed, &truth, norm).unwrap();
            prop_assert!((a.acc - b.acc).abs() < 1e-12);
            prop_assert!((a.nmi - b.nmi).abs() < 1e-12);
            prop_assert!((a.purity - b.purity).abs() < 1e-12);
        }
    }

    #[test]
    fn perfect_prediction_scores_one(truth in prop::collection::vec(0usize..6, 1..80)) {
        let pred: Vec<usize> = truth.iter().map(|t| t + 10).collect();
        let r = MetricReport::compute(&pred, &truth, NmiNorm::Geometric).unwrap();
        prop_assert_eq!((r.acc, r.nmi, r.purity), (1.0, 1.0, 1.0));
    }

    #[test]
    fn metrics_stay_in_unit_interval((pred, truth) in labels()) {
        let r = MetricReport::compute(&pred, &truth, NmiNorm::Geometric).unwrap();
        for x in [r.acc, r.nmi, r.purity] {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&x));
        }
        prop_assert!(r.acc <= r.purity + 1e-12);
    }
}
