//! `gen-ggm`: synthesize a Gaussian graphical model, sample it, and write
//! data.csv / ggm.json / truth.json.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, ValueEnum};

use graphrec::{chain_precision, random_sparse_precision, GgmFile};

use crate::config::ConfigFile;
use crate::formats::{write_json, TruthFile};
use crate::manifest::ManifestBuilder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Structure {
    /// Path graph 0–1–…–(D-1).
    Chain,
    /// Erdős–Rényi support with the given edge probability.
    Random,
}

impl std::fmt::Display for Structure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Structure::Chain => write!(f, "chain"),
            Structure::Random => write!(f, "random"),
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Number of features D (>= 2).
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Ground-truth support structure.
    #[arg(long)]
    pub structure: Option<Structure>,
    /// Edge probability for --structure random.
    #[arg(long)]
    pub edge_prob: Option<f64>,
    /// Number of samples M.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &GenArgs, cfg: &ConfigFile) -> Result<()> {
    let nodes = cfg.resolve(args.nodes, "nodes", 10)?;
    let structure = cfg.resolve(args.structure, "structure", Structure::Chain)?;
    let edge_prob = cfg.resolve(args.edge_prob, "edge-prob", 0.2)?;
    let samples = cfg.resolve(args.samples, "samples", 1000)?;
    let seed = cfg.resolve(args.seed, "seed", 0)?;

    std::fs::create_dir_all(&args.out)?;
    let mut manifest = ManifestBuilder::new("gen-ggm", args.out.join("manifest.json"));
    manifest.setting("nodes", nodes);
    manifest.setting("structure", structure);
    manifest.setting("edge_prob", edge_prob);
    manifest.setting("samples", samples);
    manifest.seeds([seed]);

    let result = (|| -> Result<()> {
        let spec = match structure {
            Structure::Chain => chain_precision(nodes, seed)?,
            Structure::Random => random_sparse_precision(nodes, edge_prob, seed)?,
        };
        let dataset = spec.sample(samples, seed)?;

        let data_path = args.out.join("data.csv");
        dataset.save_csv(&data_path)?;
        manifest.output(&data_path);

        let ggm_path = args.out.join("ggm.json");
        write_json(&ggm_path, &GgmFile::new(&spec))?;
        manifest.output(&ggm_path);

        let truth_path = args.out.join("truth.json");
        write_json(
            &truth_path,
            &TruthFile::new(&spec, dataset.feature_names().to_vec()),
        )?;
        manifest.output(&truth_path);

        println!(
            "wrote {} samples of {} features ({} true edges) to {}",
            samples,
            nodes,
            spec.num_edges(),
            args.out.display()
        );
        Ok(())
    })();

    manifest.finish(result.as_ref().err())?;
    result
}

impl std::str::FromStr for Structure {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chain" => Ok(Structure::Chain),
            "random" => Ok(Structure::Random),
            other => Err(format!("unknown structure '{other}' (chain|random)")),
        }
    }
}
