use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use constraint_morse_cli::{execute, output_dir, Command, Format, RunConfig, Status, OUT_ENV};

/// Morse classification of constrained stationary points.
#[derive(Debug, Parser)]
#[command(name = "constraint-morse", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the environment and the config).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let status = match start(&cli) {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {e}");
            Status::ConfigError
        }
    };
    ExitCode::from(status as u8)
}

fn start(cli: &Cli) -> Result<Status, constraint_morse_cli::ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let format = cli.format.or(cfg.output.format).unwrap_or_default();
    let dir = output_dir(cli.out.as_deref(), std::env::var_os(OUT_ENV).map(PathBuf::from), &cfg);
    let (bundle, written) = execute(cli.command, &cfg, format, &dir)?;
    for path in &written {
        log::info!("wrote {}", path.display());
    }
    for d in &bundle.diagnostics {
        eprintln!("{}: {d}", bundle.command);
    }
    if bundle.passed {
        println!("{}: passed ({} files in {})", bundle.command, written.len(), dir.display());
        Ok(Status::Passed)
    } else {
        println!("{}: FAILED ({} problems)", bundle.command, bundle.diagnostics.len());
        Ok(Status::Failed)
    }
}
