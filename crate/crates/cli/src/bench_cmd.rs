//! `bench`: the full generate → train → eval sweep over sample counts and
//! repeated runs, summarized as a mean±std table.
//!
//! Run `i` (for every sample count) uses seed `master_seed + i` for both the
//! ground-truth model and training. Jobs run in parallel (honoring
//! RAYON_NUM_THREADS) but the table is assembled in (samples, run) order, so
//! a re-run with the same master seed reproduces it byte for byte.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use rayon::prelude::*;

use graphrec::{auc, aupr, chain_precision, edge_scores, random_sparse_precision, TrainConfig};

use crate::config::ConfigFile;
use crate::gen::Structure;
use crate::manifest::ManifestBuilder;
use crate::train_cmd::parse_hidden;

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Number of features D (>= 2).
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Ground-truth support structure.
    #[arg(long)]
    pub structure: Option<Structure>,
    /// Edge probability for --structure random.
    #[arg(long)]
    pub edge_prob: Option<f64>,
    /// Comma-separated sample counts, e.g. "100,500,1000".
    #[arg(long)]
    pub samples_list: Option<String>,
    /// Repetitions per sample count.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Run i uses seed master_seed + i.
    #[arg(long)]
    pub master_seed: Option<u64>,
    /// Hidden layer sizes (default: twice the node count).
    #[arg(long)]
    pub hidden: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Per-sample self-dependency constant (benchmark convention).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Per-sample sparsity constant (benchmark convention).
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub val_fraction: Option<f64>,
    #[arg(long)]
    pub log_scaling: bool,
    /// Output table CSV.
    #[arg(long)]
    pub out: PathBuf,
}

struct RunOutcome {
    samples: usize,
    run: usize,
    result: Result<(f64, f64)>,
}

#[allow(clippy::too_many_arguments)]
fn one_run(
    nodes: usize,
    structure: Structure,
    edge_prob: f64,
    samples: usize,
    seed: u64,
    cfg: &TrainConfig,
) -> Result<(f64, f64)> {
    let spec = match structure {
        Structure::Chain => chain_precision(nodes, seed)?,
        Structure::Random => random_sparse_precision(nodes, edge_prob, seed)?,
    };
    let dataset = spec.sample(samples, seed)?.standardized()?;
    let cfg = TrainConfig {
        seed,
        ..cfg.clone()
    };
    let (_, _, graph) = graphrec::train(&dataset, &cfg, None)?;
    let (truth, _) = spec.ci_graph();
    let set = edge_scores(&graph, &truth)?;
    Ok((auc(&set)?, aupr(&set)?))
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (mean, std)
}

pub fn run(args: &BenchArgs, cfg_file: &ConfigFile) -> Result<()> {
    let nodes = cfg_file.resolve(args.nodes, "nodes", 10)?;
    let structure = cfg_file.resolve(args.structure, "structure", Structure::Chain)?;
    let edge_prob = cfg_file.resolve(args.edge_prob, "edge-prob", 0.2)?;
    let samples_spec = cfg_file.resolve(
        args.samples_list.clone(),
        "samples-list",
        "100,500,1000".to_string(),
    )?;
    let runs = cfg_file.resolve(args.runs, "runs", 5)?;
    let master_seed = cfg_file.resolve(args.master_seed, "master-seed", 0)?;
    let hidden = match cfg_file.resolve_opt(args.hidden.clone(), "hidden")? {
        Some(spec) => parse_hidden(&spec)?,
        None => Vec::new(),
    };
    // Benchmark-tuned defaults; penalties use the per-sample convention.
    let train_cfg = TrainConfig {
        lambda: Some(cfg_file.resolve(args.lambda, "lambda", 200.0)?),
        gamma: Some(cfg_file.resolve(args.gamma, "gamma", 200.0)?),
        epochs: cfg_file.resolve(args.epochs, "epochs", 1000)?,
        learning_rate: cfg_file.resolve(args.lr, "lr", 1e-3)?,
        hidden_dims: hidden,
        val_fraction: cfg_file.resolve(args.val_fraction, "val-fraction", 0.2)?,
        log_scaling: cfg_file.resolve_switch(args.log_scaling, "log-scaling")?,
        penalty_per_sample: true,
        patience: 0,
        ..TrainConfig::new(master_seed)
    };

    let samples_list: Vec<usize> = samples_spec
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<usize>().context("bad --samples-list entry"))
        .collect::<Result<_>>()?;
    if samples_list.is_empty() {
        bail!("--samples-list is empty");
    }
    if runs == 0 {
        bail!("--runs must be >= 1");
    }

    let mut manifest = ManifestBuilder::new("bench", args.out.with_extension("manifest.json"));
    manifest.setting("nodes", nodes);
    manifest.setting("structure", structure);
    manifest.setting("edge_prob", edge_prob);
    manifest.setting("samples_list", &samples_spec);
    manifest.setting("runs", runs);
    manifest.setting("master_seed", master_seed);
    manifest.setting("epochs", train_cfg.epochs);
    manifest.setting("lr", train_cfg.learning_rate);
    manifest.setting("lambda", train_cfg.lambda.unwrap());
    manifest.setting("gamma", train_cfg.gamma.unwrap());
    manifest.setting("penalty_per_sample", true);
    manifest.seeds((0..runs as u64).map(|i| master_seed + i));

    let result = (|| -> Result<()> {
        let jobs: Vec<(usize, usize)> = samples_list
            .iter()
            .flat_map(|&m| (0..runs).map(move |r| (m, r)))
            .collect();
        let outcomes: Vec<RunOutcome> = jobs
            .par_iter()
            .map(|&(samples, run)| RunOutcome {
                samples,
                run,
                result: one_run(
                    nodes,
                    structure,
                    edge_prob,
                    samples,
                    master_seed + run as u64,
                    &train_cfg,
                ),
            })
            .collect();

        let failures: Vec<String> = outcomes
            .iter()
            .filter_map(|o| {
                o.result
                    .as_ref()
                    .err()
                    .map(|e| format!("M={} run={}: {e:#}", o.samples, o.run))
            })
            .collect();
        for f in &failures {
            log::warn!("bench run failed: {f}");
        }
        if failures.len() == outcomes.len() {
            bail!("all {} runs failed; first error: {}", failures.len(), failures[0]);
        }

        let mut table = String::from("samples,runs,auc_mean,auc_std,aupr_mean,aupr_std\n");
        for &m in &samples_list {
            let (mut aucs, mut auprs) = (Vec::new(), Vec::new());
            for o in outcomes.iter().filter(|o| o.samples == m) {
                if let Ok((a, p)) = &o.result {
                    aucs.push(*a);
                    auprs.push(*p);
                }
            }
            if aucs.is_empty() {
                table.push_str(&format!("{m},0,,,,\n"));
                continue;
            }
            let (am, asd) = mean_std(&aucs);
            let (pm, psd) = mean_std(&auprs);
            table.push_str(&format!("{m},{},{am},{asd},{pm},{psd}\n", aucs.len()));
        }
        std::fs::write(&args.out, table)
            .with_context(|| format!("writing {}", args.out.display()))?;
        manifest.output(&args.out);
        if !failures.is_empty() {
            manifest.setting("failed_runs", failures.join("; "));
        }
        println!("wrote {}", args.out.display());
        Ok(())
    })();

    manifest.finish(result.as_ref().err())?;
    result.map_err(|e| anyhow!(e))
}
