use fedclus_core::{classification_metrics, confusion_matrix, roc_curve};
use proptest::prelude::*;

fn scored_sets() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
    (2usize..=500)
        .prop_flat_map(|n| {
            // coarse grid makes ties common
            (
                prop::collection::vec((0u32..40).prop_map(|v| v as f64 / 40.0), n),
                prop::collection::vec(0u8..2, n),
            )
        })
        .prop_filter("both classes", |(_, l)| l.contains(&0) && l.contains(&1))
}

fn pairwise_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] != 1 {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] != 0 {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

fn brute_ks(scores: &[f64], labels: &[u8]) -> f64 {
    let pos = labels.iter().filter(|&&l| l == 1).count() as f64;
    let neg = labels.len() as f64 - pos;
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.push(f64::INFINITY);
    thresholds
        .iter()
        .map(|&t| {
            let tp = scores.iter().zip(labels).filter(|(s, l)| **s >= t && **l == 1).count() as f64;
            let fp = scores.iter().zip(labels).filter(|(s, l)| **s >= t && **l == 0).count() as f64;
            tp / pos - fp / neg
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn auc_equals_pairwise_probability((scores, labels) in scored_sets()) {
        let c = roc_curve(&scores, &labels).unwrap();
        prop_assert!((c.auc() - pairwise_auc(&scores, &labels)).abs() <= 1e-9);
    }

    #[test]
    fn ks_equals_threshold_sweep((scores, labels) in scored_sets()) {
        let c = roc_curve(&scores, &labels).unwrap();
        prop_assert_eq!(c.ks(), brute_ks(&scores, &labels));
    }

    #[test]
    fn roc_is_monotone_and_anchored((scores, labels) in scored_sets()) {
        let c = roc_curve(&scores, &labels).unwrap();
        prop_assert_eq!((c.points[0].fpr, c.points[0].tpr), (0.0, 0.0));
        let last = c.points.last().unwrap();
        prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        for w in c.points.windows(2) {
            prop_assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
        }
    }

    #[test]
    fn strictly_increasing_transform_keeps_roc((scores, labels) in scored_sets()) {
        let a = roc_curve(&scores, &labels).unwrap();
        let t: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
        let b = roc_curve(&t, &labels).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn metrics_are_bounded((scores, labels) in scored_sets(), thr in 0.0f64..1.0) {
        let cm = confusion_matrix(&scores, &labels, thr).unwrap();
        prop_assert_eq!(cm.total() as usize, scores.len());
        let m = classification_metrics(&cm);
        for v in [m.accuracy, m.precision, m.recall, m.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}

#[test]
fn worked_four_point_example() {
    let c = roc_curve(&[0.9, 0.4, 0.35, 0.8], &[1, 0, 1, 0]).unwrap();
    assert_eq!(c.auc(), 0.5);
    assert_eq!(c.ks(), 0.5);
}
