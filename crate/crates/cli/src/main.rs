//! `muench`: batch driver for proof checking, derivations, operator tables
//! and law suites over finite GL frames.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{DeriveArgs, Lemma, SuiteName};
use config::{Failure, RunArgs, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "muench", version, about = "Levelled provability over finite GL frames")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a proof file, or a single formula, and print it back canonically.
    Parse {
        path: Option<PathBuf>,
        #[arg(long)]
        formula: Option<String>,
    },
    /// Check a proof file. Exit 0 if valid, 1 if invalid, 2 if unreadable.
    CheckProof { path: PathBuf },
    /// Write a proof produced by one of the lemma constructors.
    Derive {
        #[arg(value_enum)]
        lemma: Lemma,
        #[arg(long, default_value = "1")]
        alpha: String,
        #[arg(long, default_value = "0")]
        beta: String,
        #[arg(long, default_value = "p")]
        phi: String,
        #[arg(long, default_value = "q")]
        psi: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the levelled operator and report its tables.
    Eval(RunArgs),
    /// Run a named law suite. Exit 1 if an asserted check fails.
    Suite {
        #[arg(value_enum)]
        name: SuiteName,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Search single-oracle closure failures and report findings.
    Explore(RunArgs),
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Parse { path, formula } => commands::parse(path.as_deref(), formula.as_deref()),
        Command::CheckProof { path } => commands::check(&path),
        Command::Derive {
            lemma,
            alpha,
            beta,
            phi,
            psi,
            out,
        } => commands::derive(&DeriveArgs {
            lemma,
            alpha: &alpha,
            beta: &beta,
            phi: &phi,
            psi: &psi,
            out: out.as_deref(),
        }),
        Command::Eval(args) => commands::eval(&RunConfig::from_args(&args)?),
        Command::Suite { name, run } => commands::suite(name, &RunConfig::from_args(&run)?),
        Command::Explore(args) => commands::explore(&RunConfig::from_args(&args)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Rejected(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
