//! `coverhead`: simulate EcoUnit image series, train the cover head, run the
//! cross-validation protocol and export segmentation maps.

mod commands;
mod config;
mod dataset;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use commands::{EvalMode, SimulateOptions};
use config::{parse_image_size, ConfigFile};
use manifest::Run;

#[derive(Parser)]
#[command(name = "coverhead", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset: images, annotations, ground truth.
    Simulate(SimulateArgs),
    /// Train a head on every image of a dataset.
    Train(TrainArgs),
    /// Cross-validate, or score saved params or a predictions file.
    Eval(EvalArgs),
    /// Segment one PPM image with saved params.
    Segmap(SegmapArgs),
}

#[derive(Args)]
struct Common {
    /// Settings file with [simulator] and [training] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output directory; receives a manifest.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    units: Option<u32>,
    #[arg(long)]
    weeks: Option<u32>,
    /// Image size as WIDTHxHEIGHT.
    #[arg(long, value_parser = parse_image_size)]
    image_size: Option<(usize, usize)>,
    /// Relative sd of the multiplicative annotation noise.
    #[arg(long)]
    noise_sd: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset directory written by `simulate`.
    dataset: PathBuf,
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    epochs: Option<u32>,
    /// Always extract features instead of using the FMAP cache.
    #[arg(long)]
    no_cache: bool,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("mode").required(true).args(["cv", "params", "predictions"]))]
struct EvalArgs {
    dataset: PathBuf,
    #[command(flatten)]
    common: Common,
    /// Leave-two-units-out cross-validation.
    #[arg(long)]
    cv: bool,
    /// Score saved head parameters.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Score a predictions CSV in annotation format.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// With --params: write label maps and overlays for every image.
    #[arg(long)]
    export_segmaps: bool,
    #[arg(long)]
    epochs: Option<u32>,
    #[arg(long)]
    no_cache: bool,
}

#[derive(Args)]
struct SegmapArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn training_config(
    common: &Common,
    epochs: Option<u32>,
) -> Result<coverhead::trainer::TrainConfig> {
    let mut config = ConfigFile::load(common.config.as_deref())?.training()?;
    config.seed = common.seed;
    if let Some(e) = epochs {
        config = config.with_epochs(e);
    }
    config.validate()?;
    Ok(config)
}

fn simulate_options(args: &SimulateArgs) -> Result<SimulateOptions> {
    let mut config = ConfigFile::load(args.common.config.as_deref())?.simulator()?;
    if let Some(u) = args.units {
        config.units = u;
    }
    if let Some(w) = args.weeks {
        config.weeks = w;
    }
    if let Some((w, h)) = args.image_size {
        config.width = w;
        config.height = h;
    }
    let noise_sd = args.noise_sd.unwrap_or_else(commands::default_noise);
    if !(noise_sd.is_finite() && noise_sd >= 0.0) {
        bail!("--noise-sd must be a non-negative number");
    }
    Ok(SimulateOptions {
        config,
        seed: args.common.seed,
        noise_sd,
    })
}

fn eval_mode(args: &EvalArgs) -> Result<EvalMode> {
    if args.export_segmaps && args.params.is_none() {
        bail!("--export-segmaps needs --params");
    }
    Ok(if args.cv {
        EvalMode::CrossValidation(training_config(&args.common, args.epochs)?)
    } else if let Some(p) = &args.params {
        EvalMode::Params {
            path: p.clone(),
            export_segmaps: args.export_segmaps,
        }
    } else {
        EvalMode::Predictions(args.predictions.clone().expect("clap enforces a mode"))
    })
}

fn execute(command: &Command, run: &mut Run) -> Result<()> {
    match command {
        Command::Simulate(a) => commands::simulate(run, &simulate_options(a)?),
        Command::Train(a) => {
            let config = training_config(&a.common, a.epochs)?;
            commands::train(run, &a.dataset, &config, !a.no_cache)
        }
        Command::Eval(a) => commands::eval(run, &a.dataset, &eval_mode(a)?, !a.no_cache),
        Command::Segmap(a) => commands::segmap(run, &a.image, &a.params),
    }
}

fn start(command: &Command) -> Run {
    let (name, out, config, seed): (&str, &Path, Option<&Path>, Option<u64>) = match command {
        Command::Simulate(a) => (
            "simulate",
            &a.common.out,
            a.common.config.as_deref(),
            Some(a.common.seed),
        ),
        Command::Train(a) => (
            "train",
            &a.common.out,
            a.common.config.as_deref(),
            Some(a.common.seed),
        ),
        Command::Eval(a) => (
            "eval",
            &a.common.out,
            a.common.config.as_deref(),
            Some(a.common.seed),
        ),
        Command::Segmap(a) => ("segmap", &a.out, None, None),
    };
    Run::start(name, out, config, seed)
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("COVERHEAD_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("COVERHEAD_THREADS must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the thread pool")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::FAILURE;
    }
    let mut run = start(&cli.command);
    let outcome = execute(&cli.command, &mut run);
    let out = run.out.clone();
    let written = run.finish(&outcome);
    let mut code = ExitCode::SUCCESS;
    if let Err(e) = &outcome {
        eprintln!("error: {e:#}");
        eprintln!("outputs in {} are marked invalid", out.display());
        code = ExitCode::FAILURE;
    }
    if let Err(e) = written {
        eprintln!("error: {e:#}");
        code = ExitCode::FAILURE;
    }
    code
}
