use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod format;
mod identify;
mod report;
mod rows;
mod simulate;
mod stats_cmd;
mod synth_cmd;

/// Bad invocation or input that should never have been accepted; exits with 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Clean,
    PartialFailure,
}

#[derive(Debug, Parser)]
#[command(name = "impactid", version, about = "Spring-mass-damper identification of drop-impact trials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the reaction force for one parameter set
    Simulate(simulate::SimulateArgs),
    /// Generate a synthetic dataset with known parameters
    Synth(synth_cmd::SynthArgs),
    /// Identify k and c for every trial in a manifest
    Identify(config::ConfigArgs),
    /// Run the statistics battery over identification results
    Stats(stats_cmd::StatsArgs),
    /// Write plot-ready CSVs from identification results
    Report(report::ReportArgs),
}

fn dispatch(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Simulate(args) => simulate::run(&args).map(|_| Outcome::Clean),
        Command::Synth(args) => synth_cmd::run(&args).map(|_| Outcome::Clean),
        Command::Identify(args) => identify::run(&args.resolve()?),
        Command::Stats(args) => stats_cmd::run(&args),
        Command::Report(args) => report::run(&args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::PartialFailure) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
