use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qpeig_cli::{commands, CliError};

#[derive(Parser)]
#[command(
    name = "qpeig",
    about = "Quasiperiodic Schrödinger eigenvalue experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration and write eigenpair artifacts.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's outputs.dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a parameter sweep over N, D, or E0.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit coefficient-decay and truncation-error curves.
    Decay {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated eigenfunction indices.
        #[arg(long, value_delimiter = ',', required = true)]
        indices: Vec<usize>,
    },
    /// Reconstruct eigenfunctions on a physical box and report localization.
    Field {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check previously solved eigenvalues with the spectral indicator.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Half side length of the square region around each eigenvalue.
        #[arg(long)]
        half_width: f64,
        /// Acceptance threshold on the indicator value.
        #[arg(long, default_value_t = 0.1)]
        threshold: f64,
        /// Quadrature nodes on each region boundary.
        #[arg(long, default_value_t = 64)]
        nodes: usize,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { config, out } => commands::cmd_solve(&config, out.as_deref()),
        Command::Sweep { config, out } => commands::cmd_sweep(&config, out.as_deref()),
        Command::Decay {
            config,
            out,
            indices,
        } => commands::cmd_decay(&config, out.as_deref(), &indices),
        Command::Field { config, out } => commands::cmd_field(&config, out.as_deref()),
        Command::Validate {
            config,
            out,
            half_width,
            threshold,
            nodes,
        } => commands::cmd_validate(&config, out.as_deref(), half_width, threshold, nodes),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
