//! Ranking metrics over recovered edges: ROC AUC and area under the
//! precision-recall curve, both with exact grouped tie handling.

use crate::error::{Error, Result};
use crate::pathnorm::{GraphMask, RecoveredGraph};

/// One scored upper-triangle pair with its ground-truth label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeScore {
    pub i: usize,
    pub j: usize,
    pub score: f64,
    pub truth: bool,
}

/// All C(D,2) upper-triangle pairs of a graph against a truth mask.
#[derive(Debug, Clone)]
pub struct EdgeScoreSet {
    pub pairs: Vec<EdgeScore>,
}

/// Flatten the upper triangle (diagonal excluded) of the recovered scores
/// against the truth adjacency.
pub fn edge_scores(graph: &RecoveredGraph, truth: &GraphMask) -> Result<EdgeScoreSet> {
    let d = graph.dim();
    if truth.dim() != (d, d) {
        return Err(Error::shape(format!(
            "graph is {d}×{d} but truth mask is {:?}",
            truth.dim()
        )));
    }
    let mut pairs = Vec::with_capacity(d * (d - 1) / 2);
    for i in 0..d {
        for j in i + 1..d {
            let score = graph.scores[[i, j]];
            if !score.is_finite() {
                return Err(Error::invalid(format!("non-finite score at ({i},{j})")));
            }
            pairs.push(EdgeScore {
                i,
                j,
                score,
                truth: truth.matrix()[[i, j]] == 1.0,
            });
        }
    }
    Ok(EdgeScoreSet { pairs })
}

/// Area under the ROC curve, computed as the Mann–Whitney statistic via
/// average ranks: P(score_pos > score_neg) + ½·P(tie).
pub fn auc(set: &EdgeScoreSet) -> Result<f64> {
    let pos = set.pairs.iter().filter(|p| p.truth).count();
    let neg = set.pairs.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "AUC needs both classes, got {pos} positive / {neg} negative"
        )));
    }
    let mut order: Vec<usize> = (0..set.pairs.len()).collect();
    order.sort_by(|&a, &b| {
        set.pairs[a]
            .score
            .partial_cmp(&set.pairs[b].score)
            .unwrap()
    });
    // Average rank within tied groups (1-based ranks).
    let n = order.len();
    let mut rank_sum_pos = 0.0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && set.pairs[order[end]].score == set.pairs[order[start]].score {
            end += 1;
        }
        let avg_rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            if set.pairs[idx].truth {
                rank_sum_pos += avg_rank;
            }
        }
        start = end;
    }
    let p = pos as f64;
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * neg as f64))
}

/// Area under the precision-recall curve as average precision with grouped
/// ties: descending unique scores enter one group at a time, and each group
/// contributes precision·Δrecall.
pub fn aupr(set: &EdgeScoreSet) -> Result<f64> {
    let pos = set.pairs.iter().filter(|p| p.truth).count();
    if pos == 0 {
        return Err(Error::UndefinedMetric("AUPR needs a positive label".into()));
    }
    let mut order: Vec<usize> = (0..set.pairs.len()).collect();
    order.sort_by(|&a, &b| {
        set.pairs[b]
            .score
            .partial_cmp(&set.pairs[a].score)
            .unwrap()
    });
    let n = order.len();
    let mut tp = 0usize;
    let mut seen = 0usize;
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && set.pairs[order[end]].score == set.pairs[order[start]].score {
            end += 1;
        }
        for &idx in &order[start..end] {
            if set.pairs[idx].truth {
                tp += 1;
            }
        }
        seen += end - start;
        let recall = tp as f64 / pos as f64;
        let precision = tp as f64 / seen as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        start = end;
    }
    Ok(ap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ggm::chain_precision;
    use crate::pathnorm::{MaskKind, RecoveredGraph};
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set_from(scores: &[f64], labels: &[bool]) -> EdgeScoreSet {
        EdgeScoreSet {
            pairs: scores
                .iter()
                .zip(labels)
                .enumerate()
                .map(|(k, (&score, &truth))| EdgeScore {
                    i: k,
                    j: k + 1,
                    score,
                    truth,
                })
                .collect(),
        }
    }

    /// O(P·N) pair-counting oracle for the Mann–Whitney statistic.
    fn auc_oracle(set: &EdgeScoreSet) -> f64 {
        let mut wins = 0.0;
        let mut count = 0.0;
        for p in set.pairs.iter().filter(|p| p.truth) {
            for q in set.pairs.iter().filter(|q| !q.truth) {
                count += 1.0;
                if p.score > q.score {
                    wins += 1.0;
                } else if p.score == q.score {
                    wins += 0.5;
                }
            }
        }
        wins / count
    }

    /// Exhaustive threshold-sweep oracle for average precision: predict
    /// positive at score >= t for each distinct score t (descending), and
    /// sum precision·Δrecall between consecutive thresholds.
    fn aupr_oracle(set: &EdgeScoreSet) -> f64 {
        let mut thresholds: Vec<f64> = set.pairs.iter().map(|p| p.score).collect();
        thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
        thresholds.dedup();
        let pos = set.pairs.iter().filter(|p| p.truth).count() as f64;
        let mut ap = 0.0;
        let mut prev_recall = 0.0;
        for &t in &thresholds {
            let predicted: Vec<_> = set.pairs.iter().filter(|p| p.score >= t).collect();
            let tp = predicted.iter().filter(|p| p.truth).count() as f64;
            let recall = tp / pos;
            let precision = tp / predicted.len() as f64;
            ap += (recall - prev_recall) * precision;
            prev_recall = recall;
        }
        ap
    }

    #[test]
    fn edge_scores_counts_pairs() {
        let scores = Array2::zeros((3, 3));
        let g = RecoveredGraph::from_scores(scores, vec!["a".into(), "b".into(), "c".into()])
            .unwrap();
        let mask = GraphMask::new(Array2::zeros((3, 3)), MaskKind::TargetGraph).unwrap();
        let set = edge_scores(&g, &mask).unwrap();
        assert_eq!(set.pairs.len(), 3);
    }

    #[test]
    fn edge_scores_chain_truth_labels() {
        let spec = chain_precision(4, 0).unwrap();
        let (mask, _) = spec.ci_graph();
        let g = RecoveredGraph::from_scores(
            Array2::zeros((4, 4)),
            (0..4).map(|i| format!("x{i}")).collect(),
        )
        .unwrap();
        let set = edge_scores(&g, &mask).unwrap();
        for p in &set.pairs {
            assert_eq!(p.truth, p.j == p.i + 1, "({}, {})", p.i, p.j);
        }
    }

    #[test]
    fn edge_scores_rejects_dim_mismatch() {
        let g = RecoveredGraph::from_scores(
            Array2::zeros((3, 3)),
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap();
        let mask = GraphMask::new(Array2::zeros((4, 4)), MaskKind::TargetGraph).unwrap();
        assert!(edge_scores(&g, &mask).is_err());
    }

    #[test]
    fn auc_perfect_separation() {
        let set = set_from(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]);
        assert_eq!(auc(&set).unwrap(), 1.0);
    }

    #[test]
    fn auc_all_ties_is_half() {
        let set = set_from(&[0.5, 0.5, 0.5, 0.5], &[true, false, true, false]);
        assert_eq!(auc(&set).unwrap(), 0.5);
    }

    #[test]
    fn auc_single_class_undefined() {
        let set = set_from(&[0.5, 0.7], &[true, true]);
        assert!(matches!(auc(&set), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn auc_matches_pair_counting_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for trial in 0..100 {
            let n = 10; // C(5,2)
            let scores: Vec<f64> = (0..n)
                .map(|_| {
                    if rng.random_bool(0.3) {
                        0.5 // force ties
                    } else {
                        rng.random_range(0.0..1.0)
                    }
                })
                .collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
            labels[0] = true;
            labels[1] = false;
            let set = set_from(&scores, &labels);
            let got = auc(&set).unwrap();
            let want = auc_oracle(&set);
            assert!((got - want).abs() <= 1e-12, "trial {trial}: {got} vs {want}");
        }
    }

    #[test]
    fn aupr_perfect_ranking_is_one() {
        let set = set_from(&[0.9, 0.8, 0.2, 0.1, 0.05], &[true, true, false, false, false]);
        assert_eq!(aupr(&set).unwrap(), 1.0);
    }

    #[test]
    fn aupr_all_ties_is_prevalence() {
        let set = set_from(&[0.3; 5], &[true, false, false, true, false]);
        assert!((aupr(&set).unwrap() - 0.4).abs() <= 1e-15);
    }

    #[test]
    fn aupr_no_positives_undefined() {
        let set = set_from(&[0.5, 0.7], &[false, false]);
        assert!(matches!(aupr(&set), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn aupr_matches_threshold_sweep_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for trial in 0..100 {
            let n = 6;
            let scores: Vec<f64> = (0..n)
                .map(|_| {
                    if rng.random_bool(0.25) {
                        0.4
                    } else {
                        rng.random_range(0.0..1.0)
                    }
                })
                .collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
            labels[2] = true;
            let set = set_from(&scores, &labels);
            let got = aupr(&set).unwrap();
            let want = aupr_oracle(&set);
            assert!((got - want).abs() <= 1e-12, "trial {trial}: {got} vs {want}");
        }
    }

    #[test]
    fn metrics_invariant_under_monotone_transform_and_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..20 {
            let n = 12;
            let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
            labels[0] = true;
            labels[1] = false;
            let set = set_from(&scores, &labels);
            let base_auc = auc(&set).unwrap();
            let base_aupr = aupr(&set).unwrap();

            // Strictly monotone transform preserves both.
            let transformed: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp()).collect();
            let tset = set_from(&transformed, &labels);
            assert!((auc(&tset).unwrap() - base_auc).abs() <= 1e-12);
            assert!((aupr(&tset).unwrap() - base_aupr).abs() <= 1e-12);

            // Permuting the pair list changes nothing.
            let mut perm = set.clone();
            perm.pairs.reverse();
            assert_eq!(auc(&perm).unwrap(), base_auc);
            assert_eq!(aupr(&perm).unwrap(), base_aupr);
        }
    }

    #[test]
    fn random_scoring_aupr_approaches_prevalence() {
        // AP of a random ranking is upward-biased by O(log n / n), so use a
        // list long enough for the bias to sit inside the Monte-Carlo band.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let trials = 1000;
        let n = 200;
        let k = 60; // positives
        let mut total = 0.0;
        for _ in 0..trials {
            let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let mut labels = vec![false; n];
            // choose k positions without replacement
            let mut idx: Vec<usize> = (0..n).collect();
            for pick in 0..k {
                let at = rng.random_range(pick..n);
                idx.swap(pick, at);
            }
            for &i in &idx[..k] {
                labels[i] = true;
            }
            total += aupr(&set_from(&scores, &labels)).unwrap();
        }
        let mean = total / trials as f64;
        let prevalence = k as f64 / n as f64;
        assert!(
            (mean - prevalence).abs() < 0.02,
            "mean {mean} vs prevalence {prevalence}"
        );
    }
}
