//! Property tests over the public API.

use ndarray::{Array1, Array2};
use proptest::prelude::*;

use graphrec::pathnorm::path_matrix;
use graphrec::{
    auc, extract_graph, loss, symmetrize, Dataset, EdgeScore, EdgeScoreSet, Mlp, PenaltyConfig,
    PenaltyLayout,
};

fn arb_mlp() -> impl Strategy<Value = Mlp> {
    (2usize..=5, 1usize..=9, any::<u64>(), proptest::collection::vec(-2.0f64..2.0, 0..40))
        .prop_map(|(d, h, seed, tweaks)| {
            let mut mlp = Mlp::init(&[d, h, d], seed).unwrap();
            // sprinkle exact zeros and sign flips over the weights
            let mut k = 0;
            for w in mlp.weights_mut() {
                for v in w.iter_mut() {
                    if let Some(t) = tweaks.get(k) {
                        if t.abs() < 0.4 {
                            *v = 0.0;
                        } else {
                            *v *= t;
                        }
                    }
                    k += 1;
                }
            }
            mlp
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_batch_rows_are_bitwise_equal(
        mlp in arb_mlp(),
        raw in proptest::collection::vec(-3.0f64..3.0, 1..30),
    ) {
        let d = mlp.input_dim();
        let n = (raw.len() / d).max(1);
        let mut x = Array2::zeros((n, d));
        for (k, v) in x.iter_mut().enumerate() {
            *v = raw.get(k).copied().unwrap_or(0.5);
        }
        let batch = mlp.forward(&x.view()).unwrap();
        for k in 0..n {
            let row = mlp.forward_row(&x.row(k)).unwrap();
            for (a, b) in batch.row(k).iter().zip(row.iter()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn symmetrized_path_matrix_is_symmetric_nonnegative(mlp in arb_mlp()) {
        let sym = symmetrize(&path_matrix(&mlp)).unwrap();
        for i in 0..sym.nrows() {
            for j in 0..sym.ncols() {
                prop_assert!(sym[[i, j]] >= 0.0);
                prop_assert_eq!(sym[[i, j]].to_bits(), sym[[j, i]].to_bits());
            }
        }
    }

    #[test]
    fn recovered_graph_scores_are_normalized(mlp in arb_mlp()) {
        let names = (0..mlp.input_dim()).map(|i| format!("x{i}")).collect();
        let graph = extract_graph(&mlp, names).unwrap();
        let d = graph.dim();
        let mut max: f64 = 0.0;
        for i in 0..d {
            prop_assert_eq!(graph.scores[[i, i]], 0.0);
            for j in 0..d {
                let s = graph.scores[[i, j]];
                prop_assert!((0.0..=1.0).contains(&s));
                prop_assert_eq!(s.to_bits(), graph.scores[[j, i]].to_bits());
                max = max.max(s);
            }
        }
        prop_assert!(max == 1.0 || graph.edges.is_empty());
    }

    #[test]
    fn loss_total_reassembles_from_parts(
        mlp in arb_mlp(),
        lambda in 0.0f64..4.0,
        gamma in 0.0f64..4.0,
        log_scaling in any::<bool>(),
        raw in proptest::collection::vec(-2.0f64..2.0, 4..24),
    ) {
        let d = mlp.input_dim();
        let n = (raw.len() / d).max(1);
        let mut x = Array2::zeros((n, d));
        for (k, v) in x.iter_mut().enumerate() {
            *v = raw.get(k).copied().unwrap_or(-0.25);
        }
        let cfg = PenaltyConfig { lambda, gamma, log_scaling, ..PenaltyConfig::default() };
        let layout = PenaltyLayout::unimodal(d, mlp.num_layers());
        let lb = loss(&mlp, &x.view(), &cfg, &layout).unwrap();
        let g = |t: f64| if log_scaling { (graphrec::loss::LOG_EPS + t).ln() } else { t };
        let expect = lb.regression + lambda * g(lb.diag_penalty) + gamma * g(lb.sparsity_penalty);
        let rel = (lb.total - expect).abs() / expect.abs().max(1e-300);
        prop_assert!(rel <= 1e-10, "total {} vs parts {}", lb.total, expect);
    }

    #[test]
    fn auc_is_invariant_under_monotone_transforms(
        scores in proptest::collection::vec(0.0f64..1.0, 6..20),
        flags in proptest::collection::vec(any::<bool>(), 6..20),
    ) {
        let n = scores.len().min(flags.len());
        let mut labels = flags[..n].to_vec();
        labels[0] = true;
        labels[1] = false;
        let build = |s: &[f64]| EdgeScoreSet {
            pairs: s
                .iter()
                .zip(&labels)
                .enumerate()
                .map(|(k, (&score, &truth))| EdgeScore { i: k, j: k + 1, score, truth })
                .collect(),
        };
        let base = auc(&build(&scores[..n])).unwrap();
        let squashed: Vec<f64> = scores[..n].iter().map(|s| (5.0 * s).tanh()).collect();
        let shifted: Vec<f64> = scores[..n].iter().map(|s| 40.0 * s + 7.0).collect();
        prop_assert!((auc(&build(&squashed)).unwrap() - base).abs() <= 1e-12);
        prop_assert!((auc(&build(&shifted)).unwrap() - base).abs() <= 1e-12);
    }

    #[test]
    fn dataset_csv_roundtrip_is_exact(
        raw in proptest::collection::vec(-1e6f64..1e6, 8..40),
    ) {
        let n = raw.len() / 2;
        let mut values = Array2::zeros((n, 2));
        for (k, v) in values.iter_mut().enumerate() {
            *v = raw[k];
        }
        let ds = Dataset::from_matrix(values, vec!["a".into(), "b".into()]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        ds.save_csv(&path).unwrap();
        let back = Dataset::load_csv(&path).unwrap();
        prop_assert_eq!(back.values(), ds.values());
    }
}

#[test]
fn zero_paths_imply_functional_independence() {
    // Structured counterpart of the proptest cases: whenever the path view
    // has an exact zero, perturbing that input leaves that output unchanged.
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31337);
    let mut checked = 0;
    for seed in 0..80u64 {
        let mut mlp = Mlp::init(&[4, 6, 4], seed).unwrap();
        for w in mlp.weights_mut() {
            for v in w.iter_mut() {
                if rng.random_bool(0.55) {
                    *v = 0.0;
                }
            }
        }
        let p = path_matrix(&mlp);
        let view = p.path_view();
        for i in 0..4 {
            for o in 0..4 {
                if view[[i, o]] == 0.0 {
                    checked += 1;
                    let mut x = Array1::zeros(4);
                    for v in x.iter_mut() {
                        *v = rng.random_range(-2.0..2.0);
                    }
                    let base = mlp.forward_row(&x.view()).unwrap();
                    let mut xp = x.clone();
                    xp[i] += rng.random_range(-5.0..5.0);
                    let out = mlp.forward_row(&xp.view()).unwrap();
                    assert_eq!(base[o].to_bits(), out[o].to_bits(), "seed {seed} ({i},{o})");
                }
            }
        }
    }
    assert!(checked > 100, "only {checked} zero-path cases exercised");
}
