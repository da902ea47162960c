//! On-disk JSON/CSV schemas shared by the subcommands.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use graphrec::pathnorm::{GraphMask, MaskKind, RecoveredGraph};
use graphrec::{GgmSpec, LossBreakdown, TrainHistory};

pub const FORMAT_VERSION: u32 = 1;

/// graph.json: recovered scores plus the training provenance eval needs.
#[derive(Debug, Serialize, Deserialize)]
pub struct GraphFile {
    pub format_version: u32,
    pub feature_names: Vec<String>,
    pub scores: Vec<Vec<f64>>,
    pub edges: Vec<EdgeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<GraphMeta>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub i: usize,
    pub j: usize,
    pub score: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphMeta {
    pub samples: usize,
    pub seed: u64,
}

impl GraphFile {
    pub fn new(graph: &RecoveredGraph, meta: Option<GraphMeta>) -> Self {
        GraphFile {
            format_version: FORMAT_VERSION,
            feature_names: graph.feature_names.clone(),
            scores: graph.scores.rows().into_iter().map(|r| r.to_vec()).collect(),
            edges: graph
                .edges
                .iter()
                .map(|&(i, j, score)| EdgeRecord { i, j, score })
                .collect(),
            meta,
        }
    }

    pub fn into_graph(self) -> Result<(RecoveredGraph, Option<GraphMeta>)> {
        let d = self.scores.len();
        if self.scores.iter().any(|r| r.len() != d) {
            bail!("graph file has a ragged score matrix");
        }
        let flat: Vec<f64> = self.scores.into_iter().flatten().collect();
        let scores = Array2::from_shape_vec((d, d), flat)?;
        let graph = RecoveredGraph::from_scores(scores, self.feature_names)?;
        Ok((graph, self.meta))
    }
}

/// truth.json: ground-truth adjacency and partial-correlation signs.
#[derive(Debug, Serialize, Deserialize)]
pub struct TruthFile {
    pub format_version: u32,
    pub feature_names: Vec<String>,
    pub adjacency: Vec<Vec<u8>>,
    pub signs: Vec<Vec<i8>>,
}

impl TruthFile {
    pub fn new(spec: &GgmSpec, feature_names: Vec<String>) -> Self {
        TruthFile {
            format_version: FORMAT_VERSION,
            feature_names,
            adjacency: spec
                .structure()
                .rows()
                .into_iter()
                .map(|r| r.iter().map(|&v| v as u8).collect())
                .collect(),
            signs: spec.signs().rows().into_iter().map(|r| r.to_vec()).collect(),
        }
    }

    pub fn into_mask(self) -> Result<(GraphMask, Vec<String>)> {
        let d = self.adjacency.len();
        if self.adjacency.iter().any(|r| r.len() != d) {
            bail!("truth file has a ragged adjacency matrix");
        }
        let flat: Vec<f64> = self
            .adjacency
            .into_iter()
            .flatten()
            .map(|v| v as f64)
            .collect();
        let matrix = Array2::from_shape_vec((d, d), flat)?;
        let mask = GraphMask::new(matrix, MaskKind::TargetGraph)?;
        Ok((mask, self.feature_names))
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let body = serde_json::to_string_pretty(value)?;
    fs::write(path, body + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let body = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&body).with_context(|| format!("parsing {}", path.display()))
}

/// history.csv: one row per epoch.
pub fn write_history(path: &Path, history: &TrainHistory) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "epoch",
        "regression",
        "diag_penalty",
        "sparsity_penalty",
        "enc_penalty",
        "dec_penalty",
        "total",
        "val_regression",
    ])?;
    for (epoch, lb) in history.train.iter().enumerate() {
        let LossBreakdown {
            regression,
            diag_penalty,
            sparsity_penalty,
            enc_penalty,
            dec_penalty,
            total,
            ..
        } = *lb;
        let val = history.val_regression[epoch]
            .map(|v| format!("{v}"))
            .unwrap_or_default();
        w.write_record([
            epoch.to_string(),
            format!("{regression}"),
            format!("{diag_penalty}"),
            format!("{sparsity_penalty}"),
            format!("{enc_penalty}"),
            format!("{dec_penalty}"),
            format!("{total}"),
            val,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Append one row to a results table, creating it (with header) on first use.
#[allow(clippy::too_many_arguments)]
pub fn append_result_row(
    path: &Path,
    method: &str,
    d: usize,
    m: Option<usize>,
    seed: Option<u64>,
    auc: f64,
    aupr: f64,
    wall_clock_s: f64,
) -> Result<()> {
    let fresh = !path.exists();
    let file = fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::Writer::from_writer(file);
    if fresh {
        w.write_record(["method", "d", "m", "seed", "auc", "aupr", "wall_clock_s"])?;
    }
    w.write_record([
        method.to_string(),
        d.to_string(),
        m.map(|v| v.to_string()).unwrap_or_default(),
        seed.map(|v| v.to_string()).unwrap_or_default(),
        format!("{auc}"),
        format!("{aupr}"),
        format!("{wall_clock_s:.3}"),
    ])?;
    w.flush()?;
    Ok(())
}
