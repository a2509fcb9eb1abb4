use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use filltune::pipeline::{GridTarget, Pipeline, PipelineConfig, Stage};
use filltune::Error;

#[derive(Parser)]
#[command(name = "filltune", version, about = "Roughness-targeted fill-tuning point selection")]
struct Cli {
    /// Pipeline config (JSON); defaults apply to omitted keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output directory; overrides the config's out_dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the similarity field.
    Sample,
    /// Fit the RBF surface to the field.
    Fit,
    /// Find minima and transition states.
    Explore,
    /// Per-edge and overall frustration.
    Frustration,
    /// Build the roughness surface.
    Rough,
    /// Select the roughest points.
    Select,
    /// Uniform random selection with the same k.
    Baseline,
    /// Export a 2-D grid of a surface.
    Grid {
        #[arg(long, value_enum, default_value_t = Target::Roughness)]
        target: Target,
    },
    /// Run every stage in order.
    Pipeline,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Surface,
    Roughness,
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("--workers: {e}")))?;
    }
    let out = cli
        .out
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let pipeline = Pipeline::new(config, &out)?;
    match cli.command {
        Command::Sample => pipeline.run_stage(Stage::Sample),
        Command::Fit => pipeline.run_stage(Stage::Fit),
        Command::Explore => pipeline.run_stage(Stage::Explore),
        Command::Frustration => pipeline.run_stage(Stage::Frustration),
        Command::Rough => pipeline.run_stage(Stage::Rough),
        Command::Select => pipeline.run_stage(Stage::Select),
        Command::Baseline => pipeline.baseline().map(|_| ()).map_err(|e| e.context("stage baseline")),
        Command::Grid { target } => {
            let target = match target {
                Target::Surface => GridTarget::Surface,
                Target::Roughness => GridTarget::Roughness,
            };
            pipeline.grid(target).map_err(|e| e.context("stage grid"))
        }
        Command::Pipeline => pipeline.run().map(|d| {
            println!("{} points written to {}", d.entries.len(), out.join(filltune::pipeline::DATASET_JSONL).display());
        }),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
