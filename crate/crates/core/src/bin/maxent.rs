use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use maxent_core::cli::{cmd_entropy, cmd_solve, parse_masses, CliError, EntropyInput, Flags};

#[derive(Parser)]
#[command(
    name = "maxent",
    version,
    about = "Maximum-entropy densities and utilities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem-spec file and emit the summary and per-node table.
    Solve {
        /// Problem spec (TOML).
        spec: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Entropy of inline masses, a spec's density, or a spec's solution.
    Entropy {
        /// Spec file (omit when using --masses).
        spec: Option<PathBuf>,
        /// Comma-separated probability masses.
        #[arg(long, conflicts_with = "spec")]
        masses: Option<String>,
        /// Table written by `solve`; its u column is the density.
        #[arg(long, requires = "spec")]
        table: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Residual tolerance (default 1e-9 discrete, 1e-8 continuous).
    #[arg(long)]
    tol: Option<f64>,
    /// Newton iteration cap per active set.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Grid size for continuous supports, a multiple of 16.
    #[arg(long)]
    nodes: Option<usize>,
    /// Report entropies in bits.
    #[arg(long)]
    base2: bool,
    /// Write the table here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress the summary.
    #[arg(long)]
    quiet: bool,
}

impl From<Common> for Flags {
    fn from(c: Common) -> Self {
        Flags {
            tol: c.tol,
            max_iter: c.max_iter,
            nodes: c.nodes,
            base2: c.base2,
            out: c.out,
            quiet: c.quiet,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Solve { spec, common } => {
            cmd_solve(&spec, &common.into(), &mut out)?;
        }
        Command::Entropy {
            spec,
            masses,
            table,
            common,
        } => {
            let input = match (spec, masses) {
                (_, Some(m)) => EntropyInput::Masses(parse_masses(&m)?),
                (Some(path), None) => EntropyInput::Spec { path, table },
                (None, None) => return Err(CliError::Input("give a spec file or --masses".into())),
            };
            cmd_entropy(&input, &common.into(), &mut out)?;
        }
    }
    out.flush()
        .map_err(|e| CliError::Input(format!("cannot write output: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
