//! Command-line front end: synthesize flows, analyze traces, run the full
//! pipeline. Errors exit nonzero with a single diagnostic line on stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mixfractal::pipeline::{run_pipeline, RunConfig, RunMode, RunOutput};
use mixfractal::{Error, Wavelet};

#[derive(Parser)]
#[command(
    name = "mixfractal",
    version,
    about = "Synthesize mixed-fractal traffic and locate Hurst-estimation crossovers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the configured flow and write trace.csv
    Synthesize(CommonArgs),
    /// Scan an external trace and fit its scaling diagrams
    Analyze(AnalyzeArgs),
    /// Synthesize replicas, scan, fit and report end to end
    Pipeline(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Master seed (overrides the config file)
    #[arg(long)]
    seed: Option<u64>,
    /// Ensemble size (overrides the config file)
    #[arg(long)]
    replicas: Option<usize>,
    /// Artifact directory (overrides the config file)
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// JSON run configuration; optional when --input is given
    #[arg(long)]
    config: Option<PathBuf>,
    /// Trace CSV to ingest (overrides the config file)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Cumulant orders, e.g. 2,3,4 (overrides the config file)
    #[arg(long, value_delimiter = ',')]
    orders: Option<Vec<u32>>,
    /// Wavelet: haar or d4 (overrides the config file)
    #[arg(long, value_parser = parse_wavelet)]
    wavelet: Option<Wavelet>,
    /// Master seed (overrides the config file)
    #[arg(long)]
    seed: Option<u64>,
    /// Artifact directory (overrides the config file)
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn parse_wavelet(s: &str) -> Result<Wavelet, String> {
    match s {
        "haar" => Ok(Wavelet::Haar),
        "d4" => Ok(Wavelet::D4),
        other => Err(format!("unknown wavelet {other:?}, expected haar or d4")),
    }
}

fn load_config(path: &PathBuf) -> Result<RunConfig, Error> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn build_config(cli: Cli) -> Result<RunConfig, Error> {
    Ok(match cli.command {
        Command::Synthesize(args) => apply_common(load_config(&args.config)?, args, RunMode::Synthesize),
        Command::Pipeline(args) => apply_common(load_config(&args.config)?, args, RunMode::Pipeline),
        Command::Analyze(args) => {
            let mut config = match &args.config {
                Some(path) => load_config(path)?,
                None => RunConfig::default(),
            };
            config.mode = RunMode::Analyze;
            if args.config.is_none() {
                config.flow = None;
            }
            if let Some(input) = args.input {
                config.input_path = Some(input);
            }
            if let Some(orders) = args.orders {
                config.orders = orders;
            }
            if let Some(wavelet) = args.wavelet {
                config.wavelet = wavelet;
            }
            if let Some(seed) = args.seed {
                config.seed = seed;
            }
            if let Some(dir) = args.output_dir {
                config.output_dir = dir;
            }
            config
        }
    })
}

fn apply_common(mut config: RunConfig, args: CommonArgs, mode: RunMode) -> RunConfig {
    config.mode = mode;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(replicas) = args.replicas {
        config.replicas = replicas;
    }
    if let Some(dir) = args.output_dir {
        config.output_dir = dir;
    }
    config
}

fn describe(output: &RunOutput) {
    println!(
        "wrote {} artifact(s) to {}",
        output.artifacts.len(),
        output.output_dir.display()
    );
    let verdict = |significant: Option<bool>| match significant {
        Some(true) => "significant crossover",
        Some(false) => "no significant crossover",
        None => "not evaluated",
    };
    if output.cumulant_significant.is_some() || output.wavelet_significant.is_some() {
        println!(
            "cumulant diagram: {}; wavelet diagram: {}",
            verdict(output.cumulant_significant),
            verdict(output.wavelet_significant)
        );
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("MIXFRACTAL_LOG")).init();
    let cli = Cli::parse();
    let result = build_config(cli).and_then(|config| run_pipeline(&config));
    match result {
        Ok(output) => {
            describe(&output);
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("mixfractal: error[{}]: {err}", err.tag());
            ExitCode::from(err.code() as u8)
        }
    }
}
