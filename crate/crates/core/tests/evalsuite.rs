use confmil::evalsuite::{auprc, auroc, ranking, topk_retrieval, RankedBag};
use proptest::prelude::*;

fn pairwise_auroc(labels: &[bool], scores: &[f64]) -> f64 {
    let (mut num, mut pairs) = (0.0, 0.0);
    for (i, &yi) in labels.iter().enumerate() {
        for (j, &yj) in labels.iter().enumerate() {
            if yi && !yj {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    num += 1.0;
                } else if scores[i] == scores[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / pairs
}

fn sweep_auprc(labels: &[bool], scores: &[f64]) -> f64 {
    let pos = labels.iter().filter(|y| **y).count();
    let mut thresholds = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let (mut ap, mut prev_tp) = (0.0, 0);
    for t in thresholds {
        let tp = labels.iter().zip(scores).filter(|(y, s)| **y && **s >= t).count();
        let predicted = scores.iter().filter(|s| **s >= t).count();
        if tp > prev_tp {
            ap += ((tp - prev_tp) as f64 / pos as f64) * (tp as f64 / predicted as f64);
        }
        prev_tp = tp;
    }
    ap
}

fn labelled_scores() -> impl Strategy<Value = (Vec<bool>, Vec<f64>)> {
    (2usize..40)
        .prop_flat_map(|n| (prop::collection::vec(any::<bool>(), n), prop::collection::vec(0u8..6, n)))
        .prop_filter("both classes", |(y, _)| y.iter().any(|v| *v) && y.iter().any(|v| !*v))
        .prop_map(|(y, s)| (y, s.into_iter().map(|v| f64::from(v) * 0.25).collect()))
}

proptest! {
    #[test]
    fn auroc_matches_pairwise_concordance((y, s) in labelled_scores()) {
        prop_assert!((auroc(&y, &s).unwrap() - pairwise_auroc(&y, &s)).abs() <= 1e-12);
    }

    #[test]
    fn auprc_matches_threshold_sweep((y, s) in labelled_scores()) {
        prop_assert_eq!(auprc(&y, &s).unwrap(), sweep_auprc(&y, &s));
    }

    #[test]
    fn negated_scores_mirror_auroc((y, s) in labelled_scores()) {
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        prop_assert!((auroc(&y, &s).unwrap() + auroc(&y, &neg).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn auroc_ignores_monotone_transforms((y, s) in labelled_scores()) {
        let squashed: Vec<f64> = s.iter().map(|v| 1.0 / (1.0 + (-3.0 * v).exp())).collect();
        prop_assert_eq!(auroc(&y, &s).unwrap(), auroc(&y, &squashed).unwrap());
    }
}

#[test]
fn perfect_and_inverted_rankings() {
    let y = [true, false, true, false];
    assert_eq!(auroc(&y, &[0.9, 0.1, 0.8, 0.2]).unwrap(), 1.0);
    assert_eq!(auroc(&y, &[0.1, 0.9, 0.2, 0.8]).unwrap(), 0.0);
    assert_eq!(auroc(&y, &[0.5; 4]).unwrap(), 0.5);
    assert_eq!(auprc(&y, &[0.9, 0.1, 0.8, 0.2]).unwrap(), 1.0);
    // all tied: precision at the only threshold is the prevalence
    assert_eq!(auprc(&y, &[0.5; 4]).unwrap(), 0.5);
}

#[test]
fn single_class_is_undefined() {
    assert!(matches!(auroc(&[true, true], &[0.1, 0.2]), Err(confmil::Error::UndefinedMetric(_))));
    assert!(matches!(auprc(&[false, false], &[0.1, 0.2]), Err(confmil::Error::UndefinedMetric(_))));
}

#[test]
fn ranking_breaks_ties_by_position() {
    assert_eq!(ranking(&[0.2, 0.7, 0.7, 0.1]), vec![1, 2, 0, 3]);
}

#[test]
fn topk_counts_bags_with_a_key_in_the_first_k() {
    let bags = vec![
        RankedBag { id: 0, scores: vec![0.1, 0.6, 0.3], instance_labels: vec![false, true, false] },
        RankedBag { id: 1, scores: vec![0.5, 0.2, 0.3], instance_labels: vec![false, true, false] },
    ];
    assert_eq!(topk_retrieval(&bags, 1).unwrap(), 0.5);
    assert_eq!(topk_retrieval(&bags, 2).unwrap(), 0.5);
    assert_eq!(topk_retrieval(&bags, 3).unwrap(), 1.0);
}
