use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use screening_core::SolveError;

mod config;
mod figures;
mod fmt;
mod reversal;
mod sec3_cmd;
mod sec4_cmd;
mod verify;

use config::Format;

/// Exit statuses: 2 invalid input, 3 solver failure, 4 reduction not valid,
/// 5 verification failure.
#[derive(Debug)]
pub enum Failure {
    Io(String),
    Validation(String),
    Solver(String),
    NonSeparating(String),
    Verify(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Validation(_) => 2,
            Failure::Solver(_) => 3,
            Failure::NonSeparating(_) => 4,
            Failure::Verify(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Io(m)
            | Failure::Validation(m)
            | Failure::Solver(m)
            | Failure::NonSeparating(m)
            | Failure::Verify(m) => m,
        }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Config(_) => Failure::Validation(e.to_string()),
            SolveError::NonSeparating(_) | SolveError::NonInterior(_) => Failure::NonSeparating(e.to_string()),
            _ => Failure::Solver(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "screening", version, about = "Consumption contracts under privately observed, random discounting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output formats (overrides `output.formats`).
    #[arg(long, value_enum, value_delimiter = ',')]
    format: Vec<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Two-type model with a firm certain of impatience: paths, welfare, mechanism.
    SolveSec3(RunArgs),
    /// Three-period equilibrium and efficient policies per initial type.
    SolveSec4(RunArgs),
    /// Check the invariants on a configuration, or a stored policy against it.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Policy JSON to certify instead of solving.
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Also write `verify.json` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Data behind the three figures (ten types on [0.5, 1], R = 3/2, I = 3).
    Figures {
        #[arg(long, default_value = "figures")]
        out: PathBuf,
    },
    /// Choice-reversal demonstration.
    Reversal {
        #[arg(long, value_enum, default_value = "text")]
        format: reversal::Style,
    },
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::SolveSec3(a) => sec3_cmd::run(&a.config, a.out.as_deref(), &a.format),
        Command::SolveSec4(a) => sec4_cmd::run(&a.config, a.out.as_deref(), &a.format),
        Command::Verify { config, policy, out } => verify::run(&config, policy.as_deref(), out.as_deref()),
        Command::Figures { out } => figures::run(&out),
        Command::Reversal { format } => {
            reversal::run(format);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
