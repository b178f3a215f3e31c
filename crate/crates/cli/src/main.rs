//! `commitgym`: generate puzzles, solve them, evaluate depth policies and
//! export training data.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime errors. Errors
//! are reported on stderr as `{"error": "usage"|"runtime", "message": ...}`.

mod commands;
mod config;
mod refpolicy;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde_json::json;

use config::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "commitgym",
    version,
    about = "Puzzle gym for studying commitment depth"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate solver-verified instances
    Gen(commands::GenArgs),
    /// Print optimal solutions and distances
    Solve(commands::SolveArgs),
    /// Run a depth policy over an instance pool under a decision budget
    Eval(commands::EvalArgs),
    /// Tally the depths the oracle picks on a pool
    Oracle(commands::OracleArgs),
    /// Expand solver paths into counterfactual macro-action samples
    SftExport(commands::SftArgs),
    /// Phase-transition scans and adaptive-versus-fixed comparisons
    Theory(commands::TheoryArgs),
    /// Draw states as PPM images
    Render(commands::RenderArgs),
    /// Recompute progress diagnostics from transcripts
    Diag(commands::DiagArgs),
    #[command(hide = true)]
    RefPolicy(refpolicy::RefPolicyArgs),
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Gen(a) => commands::gen(a),
        Command::Solve(a) => commands::solve(a),
        Command::Eval(a) => commands::eval(a),
        Command::Oracle(a) => commands::oracle(a),
        Command::SftExport(a) => commands::sft_export(a),
        Command::Theory(a) => commands::theory(a),
        Command::Render(a) => commands::render(a),
        Command::Diag(a) => commands::diag(a),
        Command::RefPolicy(a) => refpolicy::ref_policy(a),
    }
}

fn report(kind: &str, message: String) {
    eprintln!("{}", json!({"error": kind, "message": message}));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report("usage", e.render().to_string().trim_end().to_string());
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(message)) => {
            report("usage", message);
            ExitCode::from(1)
        }
        Err(CliError::Runtime(e)) => {
            report("runtime", format!("{e:#}"));
            ExitCode::from(2)
        }
    }
}
