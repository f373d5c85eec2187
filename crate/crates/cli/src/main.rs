//! `taskgame`: design, simulate, and certify task-allocation games.
//!
//! Exit codes: 0 success, 1 generic runtime failure, 2 infeasible game or
//! design, 3 configuration/input error (including command-line misuse),
//! 4 integration instability, 5 verification failure.

mod commands;
mod config;
mod error;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use commands::Workspace;

#[derive(Parser)]
#[command(
    name = "taskgame",
    version,
    about = "Task-allocation game payoff design, simulation, and certification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the cost-optimal equilibrium and design a payoff matrix
    /// steering the population to it
    Design(CommonArgs),
    /// Integrate the coupled task/population dynamics and report
    /// convergence diagnostics
    Simulate(CommonArgs),
    /// Run finite-population stochastic simulations and compare them to the
    /// mean-field trajectory
    Agents(CommonArgs),
    /// Check the certification conditions for a payoff matrix file
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Payoff matrix JSON file (as written by `design`)
        #[arg(long)]
        payoff: PathBuf,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's "output")
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the constraint-sampler seed
    #[arg(long)]
    seed: Option<u64>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Keep the exit-code contract: flag/usage mistakes are input
            // errors (3); --help and --version are successes.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };

    let result = match cli.command {
        Command::Design(args) => {
            Workspace::new(&args.config, args.out, args.seed).and_then(commands::cmd_design)
        }
        Command::Simulate(args) => {
            Workspace::new(&args.config, args.out, args.seed).and_then(commands::cmd_simulate)
        }
        Command::Agents(args) => {
            Workspace::new(&args.config, args.out, args.seed).and_then(commands::cmd_agents)
        }
        Command::Verify { common, payoff } => Workspace::new(&common.config, common.out, common.seed)
            .and_then(|ws| commands::cmd_verify(ws, &payoff)),
    };

    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
