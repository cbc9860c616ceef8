//! `tpca`: fit, transform, classify, evaluate, sweep and render maps for
//! hyperspectral scenes.

mod commands;
mod config;
mod error;
mod ppm;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tpca_core::synth::TwoTextureScene;
use tpca_core::Extractor;

use crate::config::{Needs, Overrides};
use crate::error::CliResult;

#[derive(Parser)]
#[command(name = "tpca", version, about = "Tensor PCA hyperspectral classification pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split the labeled pixels and fit the extractor; writes model.tpca and split.json.
    Fit(PipelineArgs),
    /// Features of every labeled pixel from the fitted model; writes features.csv.
    Transform(PipelineArgs),
    /// 1-NN on the fitted model and split; writes predictions.csv for every labeled pixel.
    Classify(PipelineArgs),
    /// Mean OA and kappa over seeded repetitions; writes report.json.
    Evaluate(PipelineArgs),
    /// PCA and TPCA accuracy for every d in `dims`; writes sweep.csv.
    Sweep(PipelineArgs),
    /// Color predictions.csv by class; writes map.ppm.
    RenderMap(PipelineArgs),
    /// Write a synthetic two-texture scene (cube, labels, sidecar).
    Synth(SynthArgs),
}

#[derive(Args)]
struct PipelineArgs {
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// raw, pca or tpca.
    #[arg(long)]
    extractor: Option<Extractor>,
    #[arg(long)]
    d: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value = "synthetic")]
    name: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 40)]
    height: usize,
    #[arg(long, default_value_t = 40)]
    width: usize,
    #[arg(long, default_value_t = 8)]
    bands: usize,
    /// Side of the checkerboard class tiles.
    #[arg(long, default_value_t = 10)]
    tile: usize,
}

fn run(cli: Cli) -> CliResult<()> {
    type Step = fn(&config::PipelineConfig) -> CliResult<()>;
    let (args, step, needs): (PipelineArgs, Step, Needs) = match cli.command {
        Command::Fit(a) => (a, commands::fit, Needs { dims: false }),
        Command::Transform(a) => (a, commands::transform, Needs { dims: false }),
        Command::Classify(a) => (a, commands::classify, Needs { dims: false }),
        Command::Evaluate(a) => (a, commands::evaluate, Needs { dims: false }),
        Command::Sweep(a) => (a, commands::run_sweep, Needs { dims: true }),
        Command::RenderMap(a) => (a, commands::render_map, Needs { dims: false }),
        Command::Synth(s) => {
            let scene = TwoTextureScene {
                height: s.height,
                width: s.width,
                bands: s.bands,
                tile: s.tile,
                ..Default::default()
            };
            return commands::synth(&scene, s.seed, &s.out_dir, &s.name).map(|_| ());
        }
    };
    let overrides = Overrides {
        seed: args.seed,
        extractor: args.extractor,
        d: args.d,
    };
    let cfg = commands::prepare(&args.config, &overrides, needs)?;
    step(&cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
