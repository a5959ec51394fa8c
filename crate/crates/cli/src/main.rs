use clap::{Parser, Subcommand};
use edgefem_cli::{execute, CliError, Mode, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "edgefem", version, about = "High-order edge-element EM forward solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory, overriding `[output] dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "info")]
    log_level: String,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Manufactured-solution convergence study.
    Mms,
    /// Dipole forward run with receiver output.
    Forward,
    /// Skin-depth meshing-rule report.
    MeshRules,
}

fn run(cli: Cli) -> Result<PathBuf, CliError> {
    let path = cli.config.ok_or(edgefem_cli::ConfigError::MissingKey("--config"))?;
    let config = RunConfig::load(&path)?;
    let mode = match cli.command {
        Command::Mms => Mode::Mms,
        Command::Forward => Mode::Forward,
        Command::MeshRules => Mode::MeshRules,
    };
    execute(mode, &config, cli.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log_level).init();
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be positive");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("global thread pool is configured once");
    }
    match run(cli) {
        Ok(dir) => {
            log::info!("results written to {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
