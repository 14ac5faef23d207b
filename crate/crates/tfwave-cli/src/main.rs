//! `tfwave` batch front-end.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;
mod heatmap;

use commands::Context;
use config::Loaded;
use error::CliError;

#[derive(Parser)]
#[command(name = "tfwave", version, about = "Gabor frames, painless NSGT and ω-wave front set experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration
    #[arg(long)]
    config: PathBuf,
    /// output directory (overrides `output.dir`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// seed for random perturbations (overrides `seed`)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Coefficients of the signal in the configured frame, written as CSV
    Analyze(Common),
    /// Numeric frame bounds on the probe torus
    FrameBounds(Common),
    /// Painless certificate of a nonstationary system
    NsgtCheck(Common),
    /// Perturbation energy, Christensen bounds and weighted sums
    Perturb(Common),
    /// Sector classification of the wave front set
    Wavefront(Common),
    /// Wave front comparison between `reference` and `frame`
    Stability(Common),
    /// SVG heatmap of a coefficient CSV
    Render(Common),
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("TFWAVE_THREADS") else { return Ok(()) };
    let invalid = |message: String| CliError::Invalid { path: PathBuf::from("environment"), key: "TFWAVE_THREADS".into(), message };
    let n: usize = v.trim().parse().map_err(|_| invalid(format!("expected a positive integer, got `{v}`")))?;
    if n == 0 {
        return Err(invalid("must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| invalid(e.to_string()))
}

type Job = fn(&Context) -> Result<String, CliError>;

fn run(cli: Cli) -> Result<String, CliError> {
    configure_threads()?;
    let (common, job): (&Common, Job) = match &cli.command {
        Command::Analyze(c) => (c, commands::analyze),
        Command::FrameBounds(c) => (c, commands::frame_bounds),
        Command::NsgtCheck(c) => (c, commands::nsgt_check),
        Command::Perturb(c) => (c, commands::perturb),
        Command::Wavefront(c) => (c, commands::wavefront),
        Command::Stability(c) => (c, commands::stability),
        Command::Render(c) => (c, commands::render),
    };
    let cfg = Loaded::read(&common.config)?;
    let out = common.out.clone().unwrap_or_else(|| cfg.resolve(&cfg.config.output.dir));
    let seed = cfg.seed(common.seed);
    job(&Context { cfg, out, seed })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
