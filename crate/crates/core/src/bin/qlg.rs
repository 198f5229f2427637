use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use qlg::cli::{run, Invocation};

/// Coherence-selective latent gauge simulator and constraint calculator.
#[derive(Debug, Parser)]
#[command(name = "qlg", version)]
struct Args {
    /// coherence, evolve, kernels, phase, decohere, entangle, constrain or figures
    command: String,
    /// Flat `key = value` configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key; may be repeated
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output file, or directory when several tables are produced
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json
    #[arg(long, default_value = "csv")]
    format: String,
    /// Worker threads for parallel sweeps
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let inv = Invocation {
        command: args.command,
        config_path: args.config,
        overrides: args.set,
        out: args.out,
        format: args.format,
        threads: args.threads,
    };
    match run(&inv) {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qlg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
