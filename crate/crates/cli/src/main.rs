//! `ehsense`: solve, simulate and verify transmit-power policies from a JSON
//! configuration, writing CSV artifacts and a JSON summary per command.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "ehsense", version, about = "AoI versus distortion power control for energy-harvesting sensors")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for CSV and JSON artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Seed for every random draw, overriding `sim.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Print nothing on success.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Optimal fixed power.
    Fixed,
    /// Optimal save-and-transmit power.
    Save,
    /// Genetic interval search with water-filling powers on a seeded trace,
    /// or replay of `offline.replay`.
    Offline,
    /// Value iteration, structure report and simulated cost.
    Online,
    /// Optimal fixed power under Rayleigh fading.
    Fading,
    /// Trade-off sweep over `sweep.w_list` for `sweep.methods`.
    Tradeoff,
    /// The full property suite.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Fixed => "fixed",
            Command::Save => "save",
            Command::Offline => "offline",
            Command::Online => "online",
            Command::Fading => "fading",
            Command::Tradeoff => "tradeoff",
            Command::Verify => "verify",
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config = config::load_config(cli.config.as_deref(), cli.seed)?;
    std::fs::create_dir_all(&cli.out)?;
    let ctx = Context {
        out: cli.out.clone(),
        quiet: cli.quiet,
        config,
    };
    match cli.command {
        Command::Fixed => commands::fixed(&ctx),
        Command::Save => commands::save(&ctx),
        Command::Offline => commands::offline(&ctx),
        Command::Online => commands::online(&ctx),
        Command::Fading => commands::fading(&ctx),
        Command::Tradeoff => commands::tradeoff(&ctx),
        Command::Verify => commands::verify(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ehsense {}: {e}", cli.command.name());
            if !matches!(e, CliError::Config(_)) {
                commands::flag_failure(&cli.out, cli.command.name(), &e);
            }
            ExitCode::from(e.exit_code())
        }
    }
}
