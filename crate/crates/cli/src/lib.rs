//! Batch front-end of the `edgefem` solver: configuration parsing, the three
//! run modes and result files.

pub mod config;
pub mod output;
pub mod run;

use std::path::PathBuf;
use thiserror::Error;

pub use config::{ConfigError, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("solver did not converge: {0}")]
    NotConverged(String),
    #[error("{0}")]
    Run(String),
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    /// Process exit status: 2 configuration, 3 mesh, 4 non-convergence, 1 other.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Mesh(_) => 3,
            CliError::NotConverged(_) => 4,
            CliError::Run(_) | CliError::Io { .. } => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Mms,
    Forward,
    MeshRules,
}

/// Runs `mode` and writes its result files to the configured (or overriding)
/// output directory. Returns that directory.
pub fn execute(mode: Mode, config: &RunConfig, out: Option<PathBuf>) -> Result<PathBuf, CliError> {
    let dir = out.unwrap_or_else(|| config.output_dir());
    match mode {
        Mode::Mms => {
            let records = run::run_mms(config)?;
            output::write_convergence(&dir, &records, config.timings())?;
            let failed: Vec<String> = records
                .iter()
                .flat_map(|r| r.levels.iter().filter(|l| !l.converged).map(move |l| format!("{} n={}", r.plan, l.divisions)))
                .collect();
            if !failed.is_empty() {
                return Err(CliError::NotConverged(failed.join(", ")));
            }
        }
        Mode::Forward => {
            let result = run::run_forward(config)?;
            output::write_forward(&dir, &result, config.timings())?;
            if !result.report.converged {
                return Err(CliError::NotConverged(format!(
                    "relative residual {:.3e} after {} iterations",
                    result.report.residual, result.report.iterations
                )));
            }
        }
        Mode::MeshRules => {
            let report = run::run_mesh_rules(config)?;
            output::write_spacing(&dir, &report)?;
        }
    }
    Ok(dir)
}
