//! `xychain` command-line driver.
//!
//! Settings come from compiled defaults, then `--config FILE` (TOML or JSON,
//! chosen by extension), then the flags below.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use xychain::RestoreMode;

use crate::config::{ExperimentConfig, Overrides};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "xychain",
    version,
    about = "State transfer, restoring and entanglement along XY spin chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML or JSON configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Registration time; skips the fidelity scan.
    #[arg(long, global = true)]
    tau: Option<f64>,

    /// Solver seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Number of solver starts.
    #[arg(long, global = true)]
    starts: Option<usize>,

    /// Scatter samples and quasi-random points per statistics node.
    #[arg(long, global = true)]
    samples: Option<usize>,

    /// Restored element set: `all` or `even`.
    #[arg(long, global = true)]
    mode: Option<RestoreMode>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Averaged fidelity over time and the registration time τ0.
    ScanFidelity,
    /// Multi-start search for the restoring unitary at τ0.
    Solve,
    /// Concurrence scatter, one-parameter statistics and region map.
    Entanglement {
        /// Solution file; defaults to best_solution.json in the output directory.
        #[arg(long, value_name = "PATH")]
        solution: Option<PathBuf>,
    },
    /// Scan, both restoring modes and all entanglement analyses, with a manifest.
    RunPaper,
    /// Multiple-quantum coherence orders present in a density matrix file.
    Decompose {
        #[arg(value_name = "STATE")]
        state: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let overrides = Overrides {
        tau: cli.tau,
        seed: cli.seed,
        starts: cli.starts,
        samples: cli.samples,
        mode: cli.mode,
        out: cli.out,
    };
    if let Command::Decompose { state } = &cli.command {
        print!("{}", commands::decompose_file(state)?);
        return Ok(());
    }
    let cfg = ExperimentConfig::load(cli.config.as_deref(), &overrides)?;
    let out = cfg.out.clone();
    match cli.command {
        Command::ScanFidelity => commands::scan_fidelity(&cfg, &out).map(|_| ()),
        Command::Solve => commands::solve(&cfg, &out).map(|_| ()),
        Command::Entanglement { solution } => {
            let path = solution.unwrap_or_else(|| out.join(commands::BEST_SOLUTION));
            let sol = commands::load_solution(&path)?;
            commands::entanglement(&cfg, &out, &sol).map(|_| ())
        }
        Command::RunPaper => commands::run_paper(&cfg).map(|_| ()),
        Command::Decompose { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("xychain: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
