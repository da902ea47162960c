//! `train`: fit the penalized self-regression on a CSV and write
//! model.json / history.csv / graph.json.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;

use graphrec::multimodal::{encode, FeatureSchema};
use graphrec::{Dataset, SavedModel, SchemaFile, TrainConfig};

use crate::config::ConfigFile;
use crate::formats::{read_json, write_history, write_json, GraphFile, GraphMeta};
use crate::manifest::ManifestBuilder;

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Input CSV (header row mandatory).
    #[arg(long)]
    pub data: PathBuf,
    /// Column schema JSON; enables the mixed numeric/categorical path.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Hidden layer sizes of the core stack, comma separated (e.g. "20" or
    /// "32,16"). Default: one layer of twice the feature count.
    #[arg(long)]
    pub hidden: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Self-dependency penalty constant; omit for auto-balancing.
    #[arg(long, conflicts_with = "auto_penalty")]
    pub lambda: Option<f64>,
    /// Sparsity penalty constant; omit for auto-balancing.
    #[arg(long, conflicts_with = "auto_penalty")]
    pub gamma: Option<f64>,
    /// Encoder cross-group penalty constant (schema runs).
    #[arg(long)]
    pub eta: Option<f64>,
    /// Decoder cross-group penalty constant (schema runs).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Balance lambda and gamma against the initial regression loss
    /// (the default when neither constant is given).
    #[arg(long)]
    pub auto_penalty: bool,
    /// Apply log scaling to the structure penalty terms.
    #[arg(long)]
    pub log_scaling: bool,
    /// Interpret penalty constants per sample (divide by batch size).
    #[arg(long)]
    pub penalty_per_sample: bool,
    #[arg(long)]
    pub val_fraction: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

pub fn parse_hidden(spec: &str) -> Result<Vec<usize>> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .with_context(|| format!("bad hidden dim '{s}'"))
        })
        .collect()
}

pub fn resolve_train_config(args: &TrainArgs, cfg_file: &ConfigFile) -> Result<TrainConfig> {
    let hidden = match cfg_file.resolve_opt(args.hidden.clone(), "hidden")? {
        Some(spec) => parse_hidden(&spec)?,
        None => Vec::new(),
    };
    let auto_penalty = cfg_file.resolve_switch(args.auto_penalty, "auto-penalty")?;
    let lambda = cfg_file.resolve_opt(args.lambda, "lambda")?;
    let gamma = cfg_file.resolve_opt(args.gamma, "gamma")?;
    if auto_penalty && (lambda.is_some() || gamma.is_some()) {
        bail!("--auto-penalty conflicts with explicit --lambda/--gamma values");
    }
    let seed = cfg_file.resolve(args.seed, "seed", 0)?;
    let cfg = TrainConfig {
        lambda,
        gamma,
        eta: cfg_file.resolve(args.eta, "eta", 1.0)?,
        beta: cfg_file.resolve(args.beta, "beta", 1.0)?,
        epochs: cfg_file.resolve(args.epochs, "epochs", 2000)?,
        batch_size: cfg_file.resolve_opt(args.batch_size, "batch-size")?,
        learning_rate: cfg_file.resolve(args.lr, "lr", 1e-3)?,
        hidden_dims: hidden,
        val_fraction: cfg_file.resolve(args.val_fraction, "val-fraction", 0.2)?,
        log_scaling: cfg_file.resolve_switch(args.log_scaling, "log-scaling")?,
        penalty_per_sample: cfg_file
            .resolve_switch(args.penalty_per_sample, "penalty-per-sample")?,
        ..TrainConfig::new(seed)
    };
    Ok(cfg)
}

fn load_raw_table(path: &PathBuf) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let names: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok((names, rows))
}

pub fn run(args: &TrainArgs, cfg_file: &ConfigFile) -> Result<()> {
    let train_cfg = resolve_train_config(args, cfg_file)?;

    std::fs::create_dir_all(&args.out)?;
    let mut manifest = ManifestBuilder::new("train", args.out.join("manifest.json"));
    manifest.input(&args.data);
    if let Some(schema) = &args.schema {
        manifest.input(schema);
    }
    manifest.seeds([train_cfg.seed]);
    manifest.setting("epochs", train_cfg.epochs);
    manifest.setting("lr", train_cfg.learning_rate);
    manifest.setting("val_fraction", train_cfg.val_fraction);
    manifest.setting("log_scaling", train_cfg.log_scaling);
    manifest.setting("penalty_per_sample", train_cfg.penalty_per_sample);
    manifest.setting(
        "hidden",
        if train_cfg.hidden_dims.is_empty() {
            "2D (default)".to_string()
        } else {
            format!("{:?}", train_cfg.hidden_dims)
        },
    );

    let result = (|| -> Result<()> {
        // Load data; with a schema the table goes through one-hot encoding.
        let (schema, dataset): (Option<FeatureSchema>, Dataset) = match &args.schema {
            Some(schema_path) => {
                let file: SchemaFile = read_json(schema_path)?;
                let schema = file.into_schema()?;
                let (names, rows) = load_raw_table(&args.data)?;
                if names.len() != schema.num_features() {
                    bail!(
                        "{} has {} columns but the schema declares {}",
                        args.data.display(),
                        names.len(),
                        schema.num_features()
                    );
                }
                let encoded = encode(&rows, &schema)?;
                (Some(schema), encoded)
            }
            None => (None, Dataset::load_csv(&args.data)?.standardized()?),
        };

        let (mlp, history, graph) = graphrec::train(&dataset, &train_cfg, schema.as_ref())?;
        // Resolved constants (auto-balanced when the flags were omitted).
        manifest.setting("lambda", history.resolved_lambda);
        manifest.setting("gamma", history.resolved_gamma);
        manifest.setting("eta", train_cfg.eta);
        manifest.setting("beta", train_cfg.beta);

        let model_path = args.out.join("model.json");
        let scaling = dataset.scaling().unwrap_or(&[]).to_vec();
        write_json(&model_path, &SavedModel::new(&mlp, scaling))?;
        manifest.output(&model_path);

        let history_path = args.out.join("history.csv");
        write_history(&history_path, &history)?;
        manifest.output(&history_path);

        let graph_path = args.out.join("graph.json");
        let meta = GraphMeta {
            samples: dataset.num_samples(),
            seed: train_cfg.seed,
        };
        write_json(&graph_path, &GraphFile::new(&graph, Some(meta)))?;
        manifest.output(&graph_path);

        if let Some(schema) = &schema {
            let schema_path = args.out.join("schema.json");
            write_json(&schema_path, &SchemaFile::new(schema))?;
            manifest.output(&schema_path);
        }

        match history.val_regression.last().and_then(|v| *v) {
            Some(v) => println!("final validation regression: {v}"),
            None => println!("final validation regression: n/a (no validation split)"),
        }
        Ok(())
    })();

    manifest.finish(result.as_ref().err())?;
    result
}
