use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use privopt_cli::{execute, Command, EXIT_USAGE};

/// Locally private convex optimization experiments.
#[derive(Debug, Parser)]
#[command(name = "privopt", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides a seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 3 when an acceptance threshold is missed.
    #[arg(long)]
    check: bool,
}

fn run(args: &Args) -> Result<i32> {
    let text = args
        .config
        .as_ref()
        .map(|p| std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display())))
        .transpose()?;
    let outcome = execute(args.command, text.as_deref(), args.seed, args.check)?;
    match &args.out {
        Some(path) => std::fs::write(path, &outcome.body)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{}", outcome.body),
    }
    for m in &outcome.messages {
        eprintln!("privopt: {m}");
    }
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    match run(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("privopt: {e:#}");
            ExitCode::from(EXIT_USAGE as u8)
        }
    }
}
