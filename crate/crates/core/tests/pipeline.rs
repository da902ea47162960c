//! Library-level end-to-end runs: synthesize a GGM, recover its graph, score
//! the recovery.

use graphrec::{
    auc, aupr, chain_precision, edge_scores, recover, train, TrainConfig,
};

fn bench_style_cfg(seed: u64, epochs: usize) -> TrainConfig {
    TrainConfig {
        lambda: Some(200.0),
        gamma: Some(200.0),
        epochs,
        penalty_per_sample: true,
        patience: 0,
        ..TrainConfig::new(seed)
    }
}

#[test]
fn recovery_improves_with_samples() {
    // 3-seed means on a D=6 chain: more samples, better ranking.
    let mut small = 0.0;
    let mut large = 0.0;
    for seed in 0..3u64 {
        let spec = chain_precision(6, seed).unwrap();
        let (truth, _) = spec.ci_graph();
        for (m, acc) in [(60usize, &mut small), (400, &mut large)] {
            let ds = spec.sample(m, seed).unwrap().standardized().unwrap();
            let (_, _, graph) = train(&ds, &bench_style_cfg(seed, 2000), None).unwrap();
            let set = edge_scores(&graph, &truth).unwrap();
            *acc += auc(&set).unwrap() / 3.0;
        }
    }
    assert!(
        large > small,
        "mean AUC did not improve: M=60 {small:.3} vs M=400 {large:.3}"
    );
    assert!(large >= 0.85, "mean AUC at M=400 only {large:.3}");
}

#[test]
fn chain_recovery_beats_chance_on_both_metrics() {
    let spec = chain_precision(8, 4).unwrap();
    let ds = spec.sample(500, 4).unwrap().standardized().unwrap();
    let (_, history, graph) = train(&ds, &bench_style_cfg(4, 2000), None).unwrap();
    assert_eq!(history.train.len(), 2000);
    let (truth, _) = spec.ci_graph();
    let set = edge_scores(&graph, &truth).unwrap();
    let auc_value = auc(&set).unwrap();
    let aupr_value = aupr(&set).unwrap();
    // 7 true edges of 28 pairs: chance AUPR is 0.25, chance AUC 0.5.
    assert!(auc_value > 0.9, "AUC {auc_value}");
    assert!(aupr_value > 0.6, "AUPR {aupr_value}");
}

#[test]
fn recover_is_deterministic_and_normalized() {
    let spec = chain_precision(5, 9).unwrap();
    let ds = spec.sample(120, 2).unwrap();
    let cfg = TrainConfig {
        epochs: 150,
        patience: 0,
        ..TrainConfig::new(3)
    };
    let a = recover(&ds, &cfg).unwrap();
    let b = recover(&ds, &cfg).unwrap();
    assert_eq!(a.scores, b.scores);
    for i in 0..5 {
        assert_eq!(a.scores[[i, i]], 0.0);
        for j in 0..5 {
            assert!((0.0..=1.0).contains(&a.scores[[i, j]]));
        }
    }
}
