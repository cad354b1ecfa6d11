//! Library half of the `toma` binary: configuration, input loading and the
//! four subcommands. Each command returns its output files in memory so the
//! binary and the tests share one code path.

pub mod commands;
pub mod config;

use std::io::Write;
use std::path::Path;

use thiserror::Error;

pub use commands::{cmd_analyze, cmd_discretize, cmd_evaluate, cmd_order};
pub use config::JobConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config or input files. Exit code 2.
    #[error("{0}")]
    Input(String),
    /// Anything else, e.g. an unwritable output directory. Exit code 1.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

/// One report produced by a command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub name: String,
    /// Content including the provenance header line.
    pub body: String,
}

/// Outputs of one command plus the warnings it raised along the way.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Report {
    pub outputs: Vec<Output>,
    pub warnings: Vec<String>,
}

/// `# toma <version> config-sha256=<hash> seed=<seed|none>`
pub fn header(cfg: &JobConfig, seed: Option<u64>) -> String {
    let seed = seed.map_or_else(|| "none".to_string(), |s| s.to_string());
    format!("# toma {VERSION} config-sha256={} seed={seed}\n", cfg.hash())
}

/// Writes each output into `dir`, or to stdout in order when `dir` is `None`.
pub fn emit(outputs: &[Output], dir: Option<&Path>) -> Result<(), CliError> {
    match dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| CliError::Internal(format!("{}: {e}", dir.display())))?;
            for out in outputs {
                let path = dir.join(&out.name);
                std::fs::write(&path, &out.body).map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))?;
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            for out in outputs {
                stdout
                    .write_all(out.body.as_bytes())
                    .map_err(|e| CliError::Internal(format!("stdout: {e}")))?;
            }
        }
    }
    Ok(())
}
