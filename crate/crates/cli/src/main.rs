//! graphrec: recover sparse feature-dependency graphs by fitting a
//! path-norm-penalized multitask MLP, with synthetic GGM benchmarks.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical
//! divergence.

mod bench_cmd;
mod config;
mod eval_cmd;
mod export_cmd;
mod formats;
mod gen;
mod manifest;
mod train_cmd;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::ConfigFile;

#[derive(Parser)]
#[command(
    name = "graphrec",
    version,
    about = "Sparse dependency-graph recovery via path-norm-penalized multitask regression"
)]
struct Cli {
    /// Flat key=value config file; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic Gaussian graphical model and samples from it.
    GenGgm(gen::GenArgs),
    /// Fit the penalized self-regression and recover a dependency graph.
    Train(train_cmd::TrainArgs),
    /// Score a recovered graph against a ground-truth adjacency.
    Eval(eval_cmd::EvalArgs),
    /// Render a recovered graph as DOT, edge list or JSON.
    Export(export_cmd::ExportArgs),
    /// Seed-sweep benchmark: generate, train, and eval over a sample grid.
    Bench(bench_cmd::BenchArgs),
}

fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(lib) = cause.downcast_ref::<graphrec::Error>() {
            return match lib {
                graphrec::Error::InvalidArgument(_) => 2,
                graphrec::Error::Divergence { .. } => 4,
                _ => 3,
            };
        }
    }
    3
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cfg = match ConfigFile::load(cli.config.as_deref()) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(2);
        }
    };
    let result = match &cli.command {
        Command::GenGgm(args) => gen::run(args, &cfg),
        Command::Train(args) => train_cmd::run(args, &cfg),
        Command::Eval(args) => eval_cmd::run(args, &cfg),
        Command::Export(args) => export_cmd::run(args, &cfg),
        Command::Bench(args) => bench_cmd::run(args, &cfg),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(exit_code(&err));
    }
}
