//! `eval`: score a recovered graph against ground truth and append a row to
//! a results table.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Result};
use clap::Args;

use graphrec::{auc, aupr, edge_scores};

use crate::config::ConfigFile;
use crate::formats::{append_result_row, read_json, GraphFile, TruthFile};
use crate::manifest::ManifestBuilder;

pub const METHOD_NAME: &str = "graphrec";

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Recovered graph (graph.json).
    #[arg(long)]
    pub graph: PathBuf,
    /// Ground truth (truth.json).
    #[arg(long)]
    pub truth: PathBuf,
    /// Results CSV to append to (created with a header if missing).
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &EvalArgs, _cfg: &ConfigFile) -> Result<()> {
    let started = Instant::now();
    let mut manifest = ManifestBuilder::new(
        "eval",
        args.out.with_extension("manifest.json"),
    );
    manifest.input(&args.graph);
    manifest.input(&args.truth);

    let result = (|| -> Result<(f64, f64)> {
        let graph_file: GraphFile = read_json(&args.graph)?;
        let (graph, meta) = graph_file.into_graph()?;
        let truth_file: TruthFile = read_json(&args.truth)?;
        let (mask, truth_names) = truth_file.into_mask()?;
        if !truth_names.is_empty()
            && truth_names.len() == graph.feature_names.len()
            && truth_names != graph.feature_names
        {
            bail!("graph and truth feature names disagree");
        }
        let set = edge_scores(&graph, &mask)?;
        let auc_value = auc(&set)?;
        let aupr_value = aupr(&set)?;
        append_result_row(
            &args.out,
            METHOD_NAME,
            graph.dim(),
            meta.as_ref().map(|m| m.samples),
            meta.as_ref().map(|m| m.seed),
            auc_value,
            aupr_value,
            started.elapsed().as_secs_f64(),
        )?;
        manifest.output(&args.out);
        if let Some(meta) = &meta {
            manifest.seeds([meta.seed]);
        }
        println!("auc: {auc_value}");
        println!("aupr: {aupr_value}");
        Ok((auc_value, aupr_value))
    })();

    manifest.finish(result.as_ref().err())?;
    result.map(|_| ())
}
