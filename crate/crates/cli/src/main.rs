use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use relmas_cli::{Command, Invocation};

#[derive(Parser)]
#[command(name = "relmas", version, about = "Multi-tenant DNN scheduling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate request traces for every scenario and seed.
    GenWorkload(Common),
    /// Train the actor-critic policy.
    Train(Common),
    /// Run the selected schedulers on identical traces.
    Compare(Common),
    /// Re-run the comparison across DRAM bandwidths.
    SweepBandwidth(Common),
    /// Estimate the policy's energy overhead over hidden size and period.
    Overhead(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the seed list with a single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // bad arguments are configuration errors
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (command, common) = match cli.command {
        Cmd::GenWorkload(c) => (Command::GenWorkload, c),
        Cmd::Train(c) => (Command::Train, c),
        Cmd::Compare(c) => (Command::Compare, c),
        Cmd::SweepBandwidth(c) => (Command::SweepBandwidth, c),
        Cmd::Overhead(c) => (Command::Overhead, c),
    };
    let inv = Invocation { config: common.config, seed: common.seed, out: common.out };
    let result = relmas_cli::load(&inv).and_then(|exp| relmas_cli::run(command, &exp));
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
