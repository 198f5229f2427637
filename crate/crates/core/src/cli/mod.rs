//! Command-line front end: configuration, table emission and commands.

pub mod commands;
pub mod config;
pub mod table;

use std::path::{Path, PathBuf};

pub use commands::{config_from_manifest, execute, figure_config, manifest, write_artifacts, Artifact};
pub use config::{parse_config, Command, Format, RunConfig, Value};
pub use table::{emit_table, render_table, Cell, Table};

use crate::error::{QlgError, Result};

/// One invocation: `qlg <command> [--config PATH] [--set k=v ...] [--out PATH] [--format F]`.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub overrides: Vec<String>,
    pub out: Option<PathBuf>,
    pub format: String,
    /// Worker threads for parallel sweeps; results do not depend on it.
    pub threads: Option<usize>,
}

/// Parses, runs and writes; returns the files written.
pub fn run(inv: &Invocation) -> Result<Vec<PathBuf>> {
    let format = Format::parse(&inv.format)?;
    let (contents, source) = match &inv.config_path {
        Some(p) => (read_config(p)?, p.display().to_string()),
        None => (String::new(), "<none>".to_string()),
    };
    let config = parse_config(&inv.command, &contents, &source, &inv.overrides)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = inv.threads {
        if n == 0 {
            return Err(QlgError::Config("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| QlgError::Config(format!("cannot start thread pool: {e}")))?;
    let artifacts = pool.install(|| execute(&config))?;
    write_artifacts(&artifacts, format, inv.out.as_deref())
}

fn read_config(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| QlgError::Config(format!("cannot read {}: {e}", path.display())))
}
