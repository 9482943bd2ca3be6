use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod bundled;
mod config;
mod output;
mod run;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Run(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Run(_) => "run",
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) | CliError::Run(_) => 1,
        }
    }
}

/// Homogenized surface tensions of two-bond lattice mixtures.
#[derive(Parser)]
#[command(name = "bondmix", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Direction sweep of the cell-problem tension of a field.
    Tension(RunArgs),
    /// Membership test of a density in the attainable set.
    Bounds(RunArgs),
    /// Optimal periodic microstructure for fraction targets.
    Design(RunArgs),
    /// Synthesis of a non-periodic field from a profile, with local probes.
    Localize(RunArgs),
    /// Min-cut against exhaustive enumeration on small windows.
    Verify(RunArgs),
    /// Designs and polygons over a grid of total fractions.
    Sweep(RunArgs),
}

type Body = fn(&config::RunConfig, &std::path::Path, &mut output::Emitter) -> Result<bool, CliError>;

fn threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("BONDMIX_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("BONDMIX_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Run(e.to_string()))
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    threads()?;
    let (name, args, body): (&str, RunArgs, Body) = match cli.command {
        Command::Tension(a) => ("tension", a, run::tension),
        Command::Bounds(a) => ("bounds", a, run::bounds),
        Command::Design(a) => ("design", a, run::design),
        Command::Localize(a) => ("localize", a, run::localize_cmd),
        Command::Verify(a) => ("verify", a, run::verify),
        Command::Sweep(a) => ("sweep", a, run::sweep),
    };
    let (config, bytes) = config::load(&args.config)?;
    let base = args.config.parent().map(|p| p.to_path_buf()).unwrap_or_default();
    let mut out = output::Emitter::new(&args.out)?;
    let passed = body(&config, &base, &mut out)?;
    out.finish(name, &bytes, passed)?;
    Ok(passed)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{}", serde_json::json!({ "error": "verification", "message": "verification failed; see the output directory" }));
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::from(e.code())
        }
    }
}
