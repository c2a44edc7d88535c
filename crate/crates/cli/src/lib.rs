//! Experiment runner for the `relmas` scheduler: configuration loading,
//! trace generation, training, baseline comparison, bandwidth sweeps and
//! policy-overhead estimates. Every command writes CSV tables plus an SVG
//! chart drawn from the CSV it just wrote.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use config::{Experiment, ExperimentConfig};
pub use error::{CliError, Result};

use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    GenWorkload,
    Train,
    Compare,
    SweepBandwidth,
    Overhead,
}

/// Options shared by every command.
#[derive(Debug, Clone, Default)]
pub struct Invocation {
    pub config: PathBuf,
    /// Replaces the seed list and the trainer seed.
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Loads the experiment for `inv`, applying command-line overrides.
pub fn load(inv: &Invocation) -> Result<Experiment> {
    load_with(inv, std::env::vars())
}

pub fn load_with<I>(inv: &Invocation, vars: I) -> Result<Experiment>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut exp = Experiment::load_with(&inv.config, vars)?;
    if let Some(seed) = inv.seed {
        exp.config.seeds = vec![seed];
        exp.config.trainer.seed = seed;
    }
    if let Some(out) = &inv.out {
        exp.config.out_dir = out.clone();
    }
    Ok(exp)
}

pub fn run(command: Command, exp: &Experiment) -> Result<commands::Outputs> {
    match command {
        Command::GenWorkload => commands::gen_workload(exp),
        Command::Train => commands::train(exp),
        Command::Compare => commands::compare(exp),
        Command::SweepBandwidth => commands::sweep_bandwidth(exp),
        Command::Overhead => commands::overhead(exp),
    }
}
