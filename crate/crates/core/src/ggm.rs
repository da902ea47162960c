//! Synthetic Gaussian graphical models: sparse precision matrices with a
//! known conditional-independence graph, and seeded sampling from them.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, spd_inverse};
use crate::pathnorm::{GraphMask, MaskKind};

/// A ground-truth Gaussian graphical model: precision matrix, the binary
/// support of its off-diagonal entries, and the partial-correlation signs
/// (`sign(-Θ[i][j])` on edges, 0 elsewhere).
#[derive(Debug, Clone)]
pub struct GgmSpec {
    precision: Array2<f64>,
    structure: Array2<f64>,
    signs: Array2<i8>,
    seed: u64,
}

impl GgmSpec {
    /// Validate a precision matrix (symmetry within 1e-12, positive definite
    /// via Cholesky) and derive structure and signs from it.
    pub fn from_precision(precision: Array2<f64>, seed: u64) -> Result<Self> {
        let d = precision.nrows();
        if precision.ncols() != d || d < 2 {
            return Err(Error::InvalidSpec(format!(
                "precision must be square with D >= 2, got {:?}",
                precision.dim()
            )));
        }
        for i in 0..d {
            for j in 0..d {
                if (precision[[i, j]] - precision[[j, i]]).abs() > 1e-12 {
                    return Err(Error::InvalidSpec(format!(
                        "precision not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        if cholesky(&precision.view()).is_none() {
            return Err(Error::InvalidSpec(
                "precision is not positive definite".into(),
            ));
        }
        let mut structure = Array2::zeros((d, d));
        let mut signs = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                if i != j && precision[[i, j]] != 0.0 {
                    structure[[i, j]] = 1.0;
                    signs[[i, j]] = if precision[[i, j]] < 0.0 { 1 } else { -1 };
                }
            }
        }
        Ok(GgmSpec {
            precision,
            structure,
            signs,
            seed,
        })
    }

    pub fn precision(&self) -> &Array2<f64> {
        &self.precision
    }

    pub fn structure(&self) -> &Array2<f64> {
        &self.structure
    }

    pub fn signs(&self) -> &Array2<i8> {
        &self.signs
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.precision.nrows()
    }

    pub fn num_edges(&self) -> usize {
        (self.structure.sum() as usize) / 2
    }

    /// The ground-truth CI graph as a target mask, plus the edge signs.
    pub fn ci_graph(&self) -> (GraphMask, Array2<i8>) {
        let mask = GraphMask::new(self.structure.clone(), MaskKind::TargetGraph)
            .expect("structure is 0/1 by construction");
        (mask, self.signs.clone())
    }

    /// Draw `m` samples from N(0, Θ⁻¹): the covariance is obtained by
    /// solving the precision against the identity, then sampled through its
    /// Cholesky factor. Deterministic per seed.
    pub fn sample(&self, m: usize, seed: u64) -> Result<Dataset> {
        if m == 0 {
            return Err(Error::invalid("need at least one sample"));
        }
        let d = self.dim();
        let covariance = spd_inverse(&self.precision.view())
            .ok_or_else(|| Error::InvalidSpec("precision is not positive definite".into()))?;
        let chol = cholesky(&covariance.view())
            .ok_or_else(|| Error::InvalidSpec("covariance failed its Cholesky".into()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = Array2::zeros((m, d));
        let mut z: Array1<f64> = Array1::zeros(d);
        for k in 0..m {
            for v in z.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            for i in 0..d {
                let mut acc = 0.0;
                for j in 0..=i {
                    acc += chol[[i, j]] * z[j];
                }
                values[[k, i]] = acc;
            }
        }
        let names = (0..d).map(|i| format!("x{i}")).collect();
        Dataset::from_matrix(values, names)
    }
}

fn fill_support(
    d: usize,
    seed: u64,
    mut has_edge: impl FnMut(&mut ChaCha8Rng, usize, usize) -> bool,
) -> GgmSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut precision: Array2<f64> = Array2::zeros((d, d));
    for i in 0..d {
        for j in i + 1..d {
            if has_edge(&mut rng, i, j) {
                let magnitude = rng.random_range(0.5..1.0);
                let value = if rng.random_bool(0.5) {
                    magnitude
                } else {
                    -magnitude
                };
                precision[[i, j]] = value;
                precision[[j, i]] = value;
            }
        }
    }
    // Strict diagonal dominance (off-diagonal absolute row sum plus a 0.1
    // margin) forces positive definiteness.
    for i in 0..d {
        let row_abs: f64 = (0..d).filter(|&j| j != i).map(|j| precision[[i, j]].abs()).sum();
        precision[[i, i]] = row_abs + 0.1;
    }
    GgmSpec::from_precision(precision, seed).expect("diagonally dominant matrix is PD")
}

/// Chain-structured precision: off-diagonal support exactly at |i-j| = 1,
/// magnitudes uniform on [0.5, 1) with random signs.
pub fn chain_precision(d: usize, seed: u64) -> Result<GgmSpec> {
    if d < 2 {
        return Err(Error::invalid(format!("chain needs D >= 2, got {d}")));
    }
    Ok(fill_support(d, seed, |_, i, j| j == i + 1))
}

/// Erdős–Rényi support with the same magnitude/sign/diagonal recipe as the
/// chain generator.
pub fn random_sparse_precision(d: usize, edge_prob: f64, seed: u64) -> Result<GgmSpec> {
    if d < 2 {
        return Err(Error::invalid(format!("need D >= 2, got {d}")));
    }
    if !(edge_prob > 0.0 && edge_prob < 1.0) {
        return Err(Error::invalid(format!(
            "edge probability must be in (0, 1), got {edge_prob}"
        )));
    }
    Ok(fill_support(d, seed, |rng, _, _| rng.random_bool(edge_prob)))
}

/// JSON persistence of a GGM (precision matrix and seed); structure and
/// signs are re-derived on load.
#[derive(Debug, Serialize, Deserialize)]
pub struct GgmFile {
    pub format_version: u32,
    pub precision: Vec<Vec<f64>>,
    pub seed: u64,
}

pub const GGM_FORMAT_VERSION: u32 = 1;

impl GgmFile {
    pub fn new(spec: &GgmSpec) -> Self {
        GgmFile {
            format_version: GGM_FORMAT_VERSION,
            precision: spec
                .precision
                .rows()
                .into_iter()
                .map(|r| r.to_vec())
                .collect(),
            seed: spec.seed,
        }
    }

    pub fn into_spec(self) -> Result<GgmSpec> {
        let d = self.precision.len();
        if self.precision.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidSpec("ragged precision matrix".into()));
        }
        let flat: Vec<f64> = self.precision.into_iter().flatten().collect();
        let precision = Array2::from_shape_vec((d, d), flat)
            .map_err(|e| Error::InvalidSpec(e.to_string()))?;
        GgmSpec::from_precision(precision, self.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matmul;

    #[test]
    fn chain_has_path_support() {
        let spec = chain_precision(10, 1).unwrap();
        assert_eq!(spec.num_edges(), 9);
        for i in 0..10 {
            for j in 0..10 {
                let expect = (i as i64 - j as i64).abs() == 1;
                assert_eq!(spec.structure()[[i, j]] == 1.0, expect, "({i},{j})");
            }
        }
    }

    #[test]
    fn chain_magnitudes_in_band() {
        let spec = chain_precision(10, 2).unwrap();
        for i in 0..9 {
            let v = spec.precision()[[i, i + 1]].abs();
            assert!((0.5..1.0).contains(&v), "off-diagonal {v}");
        }
    }

    #[test]
    fn generated_precisions_are_positive_definite() {
        for seed in 0..20 {
            let spec = chain_precision(8, seed).unwrap();
            assert!(cholesky(&spec.precision().view()).is_some(), "seed {seed}");
            let er = random_sparse_precision(8, 0.3, seed).unwrap();
            assert!(cholesky(&er.precision().view()).is_some(), "seed {seed}");
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = chain_precision(6, 42).unwrap();
        let b = chain_precision(6, 42).unwrap();
        assert_eq!(a.precision(), b.precision());
    }

    #[test]
    fn chain_rejects_small_d() {
        assert!(chain_precision(1, 0).is_err());
    }

    #[test]
    fn er_structure_symmetric_zero_diag() {
        let spec = random_sparse_precision(7, 0.4, 3).unwrap();
        for i in 0..7 {
            assert_eq!(spec.structure()[[i, i]], 0.0);
            for j in 0..7 {
                assert_eq!(spec.structure()[[i, j]], spec.structure()[[j, i]]);
            }
        }
    }

    #[test]
    fn er_edge_count_matches_binomial() {
        // Mean edge count over seeds ≈ p·C(5,2) within 3σ binomial bounds.
        let p = 0.2;
        let trials = 1000;
        let mut total = 0usize;
        for seed in 0..trials {
            total += random_sparse_precision(5, p, seed).unwrap().num_edges();
        }
        let n_pairs = 10.0;
        let expected = p * n_pairs * trials as f64;
        let sigma = (n_pairs * trials as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (total as f64 - expected).abs() <= 3.0 * sigma,
            "total {total} vs expected {expected} ± {sigma}"
        );
    }

    #[test]
    fn ci_graph_signs() {
        let spec = chain_precision(10, 5).unwrap();
        let (mask, signs) = spec.ci_graph();
        let upper: f64 = (0..10)
            .flat_map(|i| (i + 1..10).map(move |j| (i, j)))
            .map(|(i, j)| mask.matrix()[[i, j]])
            .sum();
        assert_eq!(upper as usize, 9);
        for i in 0..10 {
            for j in 0..10 {
                if spec.structure()[[i, j]] == 1.0 {
                    let expect = if spec.precision()[[i, j]] < 0.0 { 1 } else { -1 };
                    assert_eq!(signs[[i, j]], expect);
                } else {
                    assert_eq!(signs[[i, j]], 0);
                }
            }
        }
    }

    #[test]
    fn sample_single_row_is_finite() {
        let spec = chain_precision(4, 7).unwrap();
        let ds = spec.sample(1, 0).unwrap();
        assert_eq!(ds.num_samples(), 1);
        assert!(ds.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = chain_precision(4, 7).unwrap();
        let a = spec.sample(50, 9).unwrap();
        let b = spec.sample(50, 9).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn sample_mean_obeys_clt_bound() {
        let spec = chain_precision(4, 3).unwrap();
        let m = 100_000;
        let ds = spec.sample(m, 11).unwrap();
        let bound = 4.0 / (m as f64).sqrt();
        for c in 0..4 {
            let mean = ds.values().column(c).sum() / m as f64;
            assert!(mean.abs() <= bound, "column {c} mean {mean} vs {bound}");
        }
    }

    #[test]
    fn empirical_covariance_approaches_inverse_precision() {
        let spec = chain_precision(4, 21).unwrap();
        let m = 100_000;
        let ds = spec.sample(m, 13).unwrap();
        let x = ds.values();
        let cov = matmul(&x.t(), &x.view()).mapv(|v| v / m as f64);
        let sigma = spd_inverse(&spec.precision().view()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let rel = (cov[[i, j]] - sigma[[i, j]]).abs() / sigma[[i, j]].abs();
                assert!(rel <= 0.05, "({i},{j}): {} vs {}", cov[[i, j]], sigma[[i, j]]);
            }
        }
    }

    #[test]
    fn ggm_file_roundtrip() {
        let spec = chain_precision(5, 17).unwrap();
        let json = serde_json::to_string(&GgmFile::new(&spec)).unwrap();
        let back: GgmFile = serde_json::from_str(&json).unwrap();
        let spec2 = back.into_spec().unwrap();
        assert_eq!(spec.precision(), spec2.precision());
        assert_eq!(spec.structure(), spec2.structure());
        assert_eq!(spec.signs(), spec2.signs());
    }
}
