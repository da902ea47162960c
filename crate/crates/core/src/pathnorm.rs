//! Input→output path mass of an MLP and the graph machinery built on it.
//!
//! The path matrix of a stack of layers is the product of the elementwise
//! absolute weight matrices, `|W_L| · ... · |W_1|`. Entry `(o, i)` aggregates
//! the absolute weight product along every path from input unit `i` to output
//! unit `o`; a zero entry means output `o` is functionally independent of
//! input `i`. Penalizing path mass outside a target support (the
//! graph-constrained path norm) steers the network toward a prescribed
//! dependency structure, and the symmetrized path matrix of a trained
//! square network is the recovered dependency graph.

use std::ops::Range;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::matmul;
use crate::mlp::Mlp;

/// Nonnegative path-mass matrix of a layer stack.
///
/// Stored in raw layer orientation `(D_out × D_in)`; `path_view` exposes the
/// `(D_in × D_out)` orientation used for masks and graph extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct PathMatrix {
    values: Array2<f64>,
}

impl PathMatrix {
    /// Raw `(D_out × D_in)` orientation.
    pub fn raw(&self) -> &Array2<f64> {
        &self.values
    }

    /// `(D_in × D_out)` orientation: entry `(i, o)` is the path mass from
    /// input `i` to output `o`.
    pub fn path_view(&self) -> ArrayView2<'_, f64> {
        self.values.t()
    }

    pub fn in_dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_square(&self) -> bool {
        self.in_dim() == self.out_dim()
    }
}

/// `|W_{L-1}| · ... · |W_0|` over the whole network.
pub fn path_matrix(mlp: &Mlp) -> PathMatrix {
    path_matrix_range(mlp, 0..mlp.num_layers())
}

/// Path matrix of a contiguous sub-stack of layers.
pub fn path_matrix_range(mlp: &Mlp, layers: Range<usize>) -> PathMatrix {
    assert!(
        !layers.is_empty() && layers.end <= mlp.num_layers(),
        "layer range {layers:?} out of bounds for {} layers",
        mlp.num_layers()
    );
    let mut product = mlp.weights()[layers.start].mapv(f64::abs);
    for l in layers.start + 1..layers.end {
        let abs = mlp.weights()[l].mapv(f64::abs);
        product = matmul(&abs.view(), &product.view());
    }
    PathMatrix { values: product }
}

/// `(P + Pᵀ)/2` on the path view of a square path matrix.
pub fn symmetrize(p: &PathMatrix) -> Result<Array2<f64>> {
    if !p.is_square() {
        return Err(Error::shape(format!(
            "symmetrize needs a square path matrix, got {}×{}",
            p.in_dim(),
            p.out_dim()
        )));
    }
    let v = p.path_view();
    let mut out = Array2::zeros(v.dim());
    for i in 0..v.nrows() {
        for j in 0..v.ncols() {
            out[[i, j]] = (v[[i, j]] + v[[j, i]]) / 2.0;
        }
    }
    Ok(out)
}

/// Frobenius norm of `P - Pᵀ` on the path view; the optional soft penalty
/// for driving the path matrix itself toward symmetry.
pub fn asymmetry(p: &PathMatrix) -> Result<f64> {
    if !p.is_square() {
        return Err(Error::shape("asymmetry needs a square path matrix"));
    }
    let v = p.path_view();
    let mut sq = 0.0;
    for i in 0..v.nrows() {
        for j in 0..v.ncols() {
            let d = v[[i, j]] - v[[j, i]];
            sq += d * d;
        }
    }
    Ok(sq.sqrt())
}

/// What a binary mask stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskKind {
    /// Adjacency of a target graph whose support paths may use freely.
    TargetGraph,
    /// Complement of a target graph.
    Complement,
    /// (Block-)diagonal self-dependency selector.
    Diagonal,
    /// Input-units × embedding-units block ownership.
    Encoder,
    /// Embedding-units × output-units block ownership.
    Decoder,
}

/// Binary 0/1 mask in path-view orientation (rows = input units).
#[derive(Debug, Clone, PartialEq)]
pub struct GraphMask {
    matrix: Array2<f64>,
    kind: MaskKind,
}

impl GraphMask {
    pub fn new(matrix: Array2<f64>, kind: MaskKind) -> Result<Self> {
        if matrix.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::invalid("mask entries must be 0 or 1"));
        }
        Ok(GraphMask { matrix, kind })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn kind(&self) -> MaskKind {
        self.kind
    }

    pub fn dim(&self) -> (usize, usize) {
        self.matrix.dim()
    }

    /// Same matrix under a different kind tag.
    pub fn with_kind(self, kind: MaskKind) -> GraphMask {
        GraphMask { kind, ..self }
    }

    /// `J - S` elementwise.
    pub fn complement(&self) -> GraphMask {
        GraphMask {
            matrix: self.matrix.mapv(|v| 1.0 - v),
            kind: MaskKind::Complement,
        }
    }
}

/// Zero matrix with ones on the diagonal: the self-dependency selector.
pub fn diag_mask(d: usize) -> GraphMask {
    GraphMask {
        matrix: Array2::eye(d),
        kind: MaskKind::Diagonal,
    }
}

/// Block mask with a ones-block wherever the input group index equals the
/// output group index.
pub fn block_diag_mask(group_sizes_in: &[usize], group_sizes_out: &[usize]) -> Result<GraphMask> {
    if group_sizes_in.is_empty()
        || group_sizes_in.len() != group_sizes_out.len()
        || group_sizes_in.iter().chain(group_sizes_out).any(|&s| s == 0)
    {
        return Err(Error::invalid(format!(
            "group sizes must be nonempty, positive and aligned: in={group_sizes_in:?} out={group_sizes_out:?}"
        )));
    }
    let total_in: usize = group_sizes_in.iter().sum();
    let total_out: usize = group_sizes_out.iter().sum();
    let mut m = Array2::zeros((total_in, total_out));
    let mut row = 0;
    let mut col = 0;
    for (si, so) in group_sizes_in.iter().zip(group_sizes_out.iter()) {
        for i in row..row + si {
            for j in col..col + so {
                m[[i, j]] = 1.0;
            }
        }
        row += si;
        col += so;
    }
    Ok(GraphMask {
        matrix: m,
        kind: MaskKind::Diagonal,
    })
}

/// Graph-constrained path norm: L1 mass of path-view entries outside the
/// support of `target`.
pub fn gcpn(p: &PathMatrix, target: &GraphMask) -> Result<f64> {
    let view = p.path_view();
    if view.dim() != target.dim() {
        return Err(Error::shape(format!(
            "path view {:?} vs mask {:?}",
            view.dim(),
            target.dim()
        )));
    }
    let mut total = 0.0;
    for (pv, mv) in view.iter().zip(target.matrix.iter()) {
        total += pv.abs() * (1.0 - mv);
    }
    Ok(total)
}

/// L1 mass of `matrix` restricted to the support of `mask` (the
/// self-dependency penalty uses this with the (block-)diagonal mask).
pub fn masked_l1(matrix: &ArrayView2<f64>, mask: &GraphMask) -> Result<f64> {
    if matrix.dim() != mask.dim() {
        return Err(Error::shape(format!(
            "matrix {:?} vs mask {:?}",
            matrix.dim(),
            mask.dim()
        )));
    }
    let mut total = 0.0;
    for (v, m) in matrix.iter().zip(mask.matrix.iter()) {
        total += v.abs() * m;
    }
    Ok(total)
}

/// Recovered dependency graph: symmetric scores in `[0, 1]` with zero
/// diagonal, plus the nonzero edges in descending-score order.
#[derive(Debug, Clone)]
pub struct RecoveredGraph {
    pub scores: Array2<f64>,
    pub edges: Vec<(usize, usize, f64)>,
    pub feature_names: Vec<String>,
}

impl RecoveredGraph {
    /// Normalize a symmetric nonnegative score matrix into a graph: zero the
    /// diagonal, divide by the maximum remaining entry (no-op if zero), and
    /// list nonzero edges in descending score order, ties broken by (i, j).
    pub fn from_scores(mut scores: Array2<f64>, feature_names: Vec<String>) -> Result<Self> {
        let d = scores.nrows();
        if scores.ncols() != d {
            return Err(Error::shape("score matrix must be square"));
        }
        if feature_names.len() != d {
            return Err(Error::shape(format!(
                "{} feature names for a {d}×{d} score matrix",
                feature_names.len()
            )));
        }
        for i in 0..d {
            scores[[i, i]] = 0.0;
        }
        let max = scores.iter().cloned().fold(0.0, f64::max);
        if max > 0.0 {
            scores.mapv_inplace(|v| v / max);
        }
        let mut edges = Vec::new();
        for i in 0..d {
            for j in i + 1..d {
                if scores[[i, j]] > 0.0 {
                    edges.push((i, j, scores[[i, j]]));
                }
            }
        }
        edges.sort_by(|a, b| {
            b.2.partial_cmp(&a.2)
                .unwrap()
                .then(a.0.cmp(&b.0))
                .then(a.1.cmp(&b.1))
        });
        Ok(RecoveredGraph {
            scores,
            edges,
            feature_names,
        })
    }

    pub fn dim(&self) -> usize {
        self.scores.nrows()
    }
}

/// Extract the dependency graph of a square network: symmetrized path
/// matrix, diagonal zeroed, max-normalized.
pub fn extract_graph(mlp: &Mlp, feature_names: Vec<String>) -> Result<RecoveredGraph> {
    if mlp.input_dim() != mlp.output_dim() {
        return Err(Error::shape(format!(
            "graph extraction needs matching input/output dims, got {}→{}",
            mlp.input_dim(),
            mlp.output_dim()
        )));
    }
    let sym = symmetrize(&path_matrix(mlp))?;
    RecoveredGraph::from_scores(sym, feature_names)
}
