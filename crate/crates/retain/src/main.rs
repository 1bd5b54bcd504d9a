//! Command-line front end: read the instance file, dispatch, print.
//!
//! The structured report goes to standard output; the one-line summary and
//! timing go to the diagnostic stream so output stays machine-diffable.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use retain::report::{io_error_report, run, Command, Options};

#[derive(Parser)]
#[command(name = "retain", version, about = "Retention-problem solver for finite disturbed systems")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse an instance file and check every structural law
    Validate(CommonArgs),
    /// Compute the kernel, the solvability verdict, and the resolving procedure
    Solve(CommonArgs),
    /// Cross-check the kernel against exhaustive procedure search
    Verify(CommonArgs),
    /// Decide whether the disturbance set is closed under splicing
    Decomposable(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Instance file (JSON)
    file: PathBuf,
    /// Complete the constraint to its prefix closure before validation
    #[arg(long)]
    close_constraint: bool,
    /// Per-state cap on exhaustive certification work
    #[arg(long, default_value_t = retain::oracle::DEFAULT_BUDGET)]
    budget: u64,
    /// For solve: list every kernel state with its procedure value sizes
    #[arg(long)]
    all_states: bool,
}

fn main() {
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Cmd::Validate(a) => (Command::Validate, a),
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::Decomposable(a) => (Command::Decomposable, a),
    };
    let opts = Options {
        close_constraint: args.close_constraint,
        budget: args.budget,
        all_states: args.all_states,
    };

    let started = Instant::now();
    let report = match std::fs::read_to_string(&args.file) {
        Ok(text) => run(command, &text, &opts),
        Err(e) => io_error_report(command, &format!("{}: {e}", args.file.display())),
    };
    let elapsed = started.elapsed();

    println!(
        "{}",
        serde_json::to_string_pretty(&report.document()).expect("report serializes")
    );
    eprintln!("{} [elapsed: {} ms]", report.summary(), elapsed.as_millis());
    std::process::exit(report.exit_code);
}
