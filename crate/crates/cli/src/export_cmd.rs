//! `export`: render a recovered graph as DOT, an edge-list CSV, or the full
//! JSON score matrix.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};

use graphrec::pathnorm::RecoveredGraph;

use crate::config::ConfigFile;
use crate::formats::{read_json, write_json, GraphFile};
use crate::manifest::ManifestBuilder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Dot,
    Edgelist,
    Json,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Recovered graph (graph.json).
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub format: Format,
    /// Keep edges with score >= threshold (DOT and edge lists).
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn render_dot(graph: &RecoveredGraph, threshold: f64) -> String {
    let mut out = String::from("graph dependencies {\n");
    for (idx, name) in graph.feature_names.iter().enumerate() {
        out.push_str(&format!("  n{idx} [label=\"{name}\"];\n"));
    }
    for &(i, j, score) in &graph.edges {
        if score >= threshold {
            out.push_str(&format!("  n{i} -- n{j} [label=\"{score:.4}\"];\n"));
        }
    }
    out.push_str("}\n");
    out
}

fn render_edgelist(graph: &RecoveredGraph, threshold: f64) -> String {
    let mut out = String::from("i,j,score\n");
    for &(i, j, score) in &graph.edges {
        if score >= threshold {
            out.push_str(&format!("{i},{j},{score}\n"));
        }
    }
    out
}

pub fn run(args: &ExportArgs, _cfg: &ConfigFile) -> Result<()> {
    let graph_file: GraphFile = read_json(&args.graph)?;
    let (graph, meta) = graph_file.into_graph()?;
    match args.format {
        Format::Json => {
            // Full matrix regardless of threshold.
            let doc = GraphFile::new(&graph, meta);
            match &args.out {
                Some(path) => {
                    let mut manifest =
                        ManifestBuilder::new("export", path.with_extension("manifest.json"));
                    manifest.input(&args.graph);
                    let result = write_json(path, &doc);
                    manifest.output(path);
                    manifest.finish(result.as_ref().err().map(|e| e as &anyhow::Error))?;
                    result
                }
                None => {
                    println!("{}", serde_json::to_string_pretty(&doc)?);
                    Ok(())
                }
            }
        }
        Format::Dot | Format::Edgelist => {
            let body = match args.format {
                Format::Dot => render_dot(&graph, args.threshold),
                Format::Edgelist => render_edgelist(&graph, args.threshold),
                Format::Json => unreachable!(),
            };
            match &args.out {
                Some(path) => {
                    let mut manifest =
                        ManifestBuilder::new("export", path.with_extension("manifest.json"));
                    manifest.input(&args.graph);
                    manifest.setting("format", format!("{:?}", args.format).to_lowercase());
                    manifest.setting("threshold", args.threshold);
                    let result = std::fs::write(path, &body)
                        .with_context(|| format!("writing {}", path.display()));
                    manifest.output(path);
                    manifest.finish(result.as_ref().err())?;
                    result
                }
                None => {
                    std::io::stdout().write_all(body.as_bytes())?;
                    Ok(())
                }
            }
        }
    }
}
