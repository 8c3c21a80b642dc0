use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use corrdyn_cli::{execute, CliError, RunConfig, Task};

/// Correlator dynamics for coupled spin-1/2 systems.
#[derive(Parser)]
#[command(name = "corrdyn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task listed in the config.
    Run(Args),
    /// Compare the hierarchy against exact evolution (validate.txt).
    Validate(Args),
    /// Pole frequencies and broadened density (spectrum.csv).
    Spectrum(Args),
}

#[derive(clap::Args)]
struct Args {
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("CORRDYN_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Parse(format!("CORRDYN_THREADS must be a positive integer, got \"{v}\"")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let (args, only) = match cli.command {
        Command::Run(a) => (a, None),
        Command::Validate(a) => (a, Some(Task::Validate)),
        Command::Spectrum(a) => (a, Some(Task::Spectrum)),
    };
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(task) = only {
        cfg.tasks = vec![task];
    }
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", args.out_dir.display())))?;
    execute(&cfg, &args.out_dir)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
