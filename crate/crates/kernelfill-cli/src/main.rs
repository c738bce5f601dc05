use clap::{Parser, Subcommand};

use kernelfill_cli::commands::{
    cmd_check_autoparallel, cmd_complete, cmd_gen_data, cmd_sweep, CheckAutoparallelArgs,
    CompleteArgs, GenDataArgs, SweepArgs,
};

/// Kernel matrix completion by alternating KL projections, plus the
/// clustering evaluation experiment around it.
///
/// Set KERNELFILL_LOG to error, warn, info or debug to control stderr
/// verbosity.
#[derive(Parser)]
#[command(name = "kernelfill", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Complete an incomplete kernel matrix against a base matrix.
    Complete(CompleteArgs),
    /// Mask samples at growing ratios, complete, and score by clustering.
    Sweep(SweepArgs),
    /// Test base matrices for the doubly-autoparallel span condition.
    CheckAutoparallel(CheckAutoparallelArgs),
    /// Generate a synthetic paired-marker dataset.
    GenData(GenDataArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Complete(args) => cmd_complete(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::CheckAutoparallel(args) => cmd_check_autoparallel(args),
        Command::GenData(args) => cmd_gen_data(args),
    };
    if let Err(err) = result {
        eprintln!("kernelfill: {err}");
        std::process::exit(err.exit_code());
    }
}
