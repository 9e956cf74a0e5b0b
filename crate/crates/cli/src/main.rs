//! `kslab`: batch driver for profiles, spectra and renormalized flows.
//!
//! Exit codes: 0 success (an instability exit of a flow is a result, not a
//! failure), 2 configuration or bracket error, 3 numerical failure, 4 a
//! required artifact is missing.

mod cache;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Runner;
use config::ExperimentConfig;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub msg: String,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self { code: 2, msg: msg.into() }
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Self { code: 3, msg: msg.into() }
    }

    pub fn missing(msg: impl Into<String>) -> Self {
        Self { code: 4, msg: msg.into() }
    }
}

impl From<kslab_core::Error> for CliError {
    fn from(e: kslab_core::Error) -> Self {
        use kslab_core::Error::*;
        let code = match e {
            Parameter(_) | Domain(_) | Bracket(_) | Precondition(_) | OutsideTube(_) => 2,
            _ => 3,
        };
        Self { code, msg: e.to_string() }
    }
}

#[derive(Parser)]
#[command(name = "kslab", version, about = "Self-similar blow-up profiles, spectra and renormalized flows")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// Configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for randomized checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding io.out_dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Neither read nor write the cache.
    #[arg(long, global = true)]
    no_cache: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Verb {
    /// Compute or load the profile.
    Profile,
    /// Spectrum of the linearized operator.
    Spectrum,
    /// Renormalized flow from the configured perturbation.
    Evolve,
    /// Bisection for the stable manifold of a profile with one unstable direction.
    Shoot,
    /// Summarize the artifacts in the output directory.
    Report,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let runner = Runner::new(cfg, cli.out, cli.seed, cli.no_cache);
    match cli.verb {
        Verb::Profile => {
            let p = runner.profile()?;
            println!("a_{} = {:.15}", p.n(), p.a());
            println!("tail_c = {:.15}", p.tail_c());
            println!("residual_sup = {:.3e}", p.residual_sup());
        }
        Verb::Spectrum => {
            runner.spectrum()?;
        }
        Verb::Evolve => {
            runner.evolve()?;
        }
        Verb::Shoot => {
            runner.shoot()?;
        }
        Verb::Report => {
            runner.report()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kslab: error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}
